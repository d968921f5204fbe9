import numpy as np
import pytest

from negscope.corpus import parse_string

# "You must not drive because it is dangerous": cue "not", scope {You, drive}
FIG1 = """# sent_id = fig1
# lang = en
1\tYou\tyou\tPRON\t4\tnsubj\t_\tS
2\tmust\tmust\tAUX\t4\taux\t_\t_
3\tnot\tnot\tPART\t4\tneg\tC\t_
4\tdrive\tdrive\tVERB\t0\troot\t_\tS
5\tbecause\tbecause\tSCONJ\t8\tmark\t_\t_
6\tit\tit\tPRON\t8\tnsubj\t_\t_
7\tis\tbe\tAUX\t8\tcop\t_\t_
8\tdangerous\tdangerous\tADJ\t4\tadvcl\t_\t_

"""


def nsf(rows, comments=("# sent_id = s1", "# lang = en")):
    """Build an NSF block from tuples (form, upos, head, deprel, *marks)."""
    lines = list(comments)
    for i, (form, upos, head, rel, *marks) in enumerate(rows, start=1):
        lines.append("\t".join([str(i), form, form.lower(), upos, str(head), rel, *marks]))
    return "\n".join(lines) + "\n\n"


@pytest.fixture
def fig1():
    return parse_string(FIG1)[0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
