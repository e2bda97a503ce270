import numpy as np
import pytest

from hatelab import synthetic
from hatelab.corpus import split_dev
from hatelab.embed import build_vocab, random_table
from hatelab.models import BiLstmConfig, CnnConfig, init_bilstm, init_cnn
from hatelab.train import TrainConfig, encode_corpus, train


@pytest.fixture(scope="session")
def lexicons():
    return synthetic.make_lexicons(0)


@pytest.fixture(scope="session")
def small_task(lexicons):
    """A small planted-lexicon task: (vocab, table, train, dev, classes)."""
    planted, background = lexicons
    full = synthetic.generate(600, 1, planted, background, max_len=12)
    tr, dev = split_dev(full, 0.2, seed=0)
    vocab = build_vocab(tr)
    table = random_table(vocab, seed=0)
    classes = full.schema.label_set
    return vocab, table, encode_corpus(tr, vocab), encode_corpus(dev, vocab), classes


@pytest.fixture(scope="session")
def trained_bilstm(small_task):
    vocab, table, tr, dev, classes = small_task
    model = init_bilstm(BiLstmConfig(), table, seed=1)
    model, hist = train(model, tr, dev, TrainConfig(epochs=6, batch_size=32), seed=1, classes=classes)
    return model, vocab, hist


@pytest.fixture
def make_cnn(small_task):
    def factory(seed):
        return init_cnn(CnnConfig(filters_per_width=8), small_task[1], seed)
    return factory


_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else "SKIP" if rep.skipped else "FAIL"
        _CRITERIA[number] = (status, title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
