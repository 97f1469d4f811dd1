import pytest

from eagibench.bank import instantiate, load_shipped_bank


@pytest.fixture(scope="session")
def bank():
    return load_shipped_bank()


@pytest.fixture(scope="session")
def instances(bank):
    return {t.id: instantiate(t, bank) for t in bank.templates}
