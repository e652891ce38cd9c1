import pytest

from lore.corpus import corpus_path
from lore.syntax import load_file
from lore.values import appointment
from lore.verify import compute_conflicts

DATA = __import__("pathlib").Path(__file__).parent / "data"
GOLDEN = __import__("pathlib").Path(__file__).parent / "golden"


def program(name: str):
    if name.endswith(".lore") and (DATA / name).exists():
        return load_file(str(DATA / name))
    return load_file(corpus_path(name))


@pytest.fixture(scope="session")
def calendar():
    return program("calendar.lore")


@pytest.fixture(scope="session")
def extended():
    return program("calendar-extended.lore")


@pytest.fixture(scope="session")
def tpcc():
    return program("tpcc-mini.lore")


@pytest.fixture(scope="session")
def accounts():
    return program("accounts.lore")


@pytest.fixture(scope="session")
def calendar_conflicts(calendar):
    return compute_conflicts(calendar)


@pytest.fixture(scope="session")
def tpcc_conflicts(tpcc):
    return compute_conflicts(tpcc)


VACATION_ARGS = [appointment(1, 0, 12), appointment(2, 0, 20), appointment(3, 0, 31)]
WORK_ARGS = [appointment(4, 1, 2), appointment(1, 0, 12)]


@pytest.fixture(scope="session")
def calendar_args():
    return {"add_vacation": VACATION_ARGS, "add_work": WORK_ARGS}


@pytest.fixture(scope="session")
def extended_conflicts(extended):
    return compute_conflicts(extended)
