"""Shared fixtures: a handcrafted corpus with known exact statistics, two
generated synthetic corpora (one small, one big enough to learn from), and
an optional real-corpus gate driven by the HYST_DATA environment variable.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import pytest

from hyst.corpus import load_all_splits
from hyst.toydata import ToyDataConfig, write_toy_corpus

DATA_ENV_VAR = "HYST_DATA"

# Handcrafted three-dialogue corpus.  Everything downstream of it is
# asserted against hand-computed numbers, so edit with care.
FIXTURE_DATA = {
    "AAA0001.json": {
        "goal": {},
        "log": [
            {"text": "i need a cheap restaurant in the north part of town",
             "metadata": {}},
            {"text": "okay . what food type ?",
             "metadata": {
                 "restaurant": {
                     "book": {"booked": [], "people": "", "day": "",
                              "time": ""},
                     "semi": {"food": "", "pricerange": "cheap",
                              "name": "not mentioned", "area": "north"},
                 },
                 "police": {"book": {"booked": []}, "semi": {}},
             }},
            {"text": "italian food please and i want to book a table for 4 "
                     "people at 17:30 on friday",
             "metadata": {}},
            {"text": "booked ! your reference is 00000 .",
             "metadata": {
                 "restaurant": {
                     "book": {"booked": [{"name": "x"}], "people": "4",
                              "day": "friday", "time": "17:30"},
                     "semi": {"food": "Italian ", "pricerange": "cheap",
                              "name": "", "area": "north"},
                 },
                 "police": {"book": {"booked": []}, "semi": {}},
             }},
        ],
    },
    "BBB0002.json": {
        "goal": {},
        "log": [
            {"text": "i want a moderate hotel with free parking and the "
                     "area does not matter",
             "metadata": {}},
            {"text": "how about the alpha lodge ?",
             "metadata": {
                 "hotel": {
                     "book": {"booked": [], "people": "", "day": "",
                              "stay": ""},
                     "semi": {"name": "", "area": "dont care",
                              "parking": "yes", "pricerange": "moderate",
                              "stars": "", "internet": "", "type": ""},
                 },
             }},
            {"text": "yes , book it please", "metadata": {}},
            {"text": "done !",
             "metadata": {
                 "hotel": {
                     "book": {"booked": [], "people": "", "day": "",
                              "stay": ""},
                     "semi": {"name": "Alpha Lodge", "area": "don't care",
                              "parking": "yes", "pricerange": "moderate",
                              "stars": "", "internet": "", "type": ""},
                 },
             }},
        ],
    },
    "CCC0003.json": {
        "goal": {},
        "log": [
            {"text": "", "metadata": {}},
            {"text": "hello , how can i help ?", "metadata": {}},
            {"text": "a taxi from cambridge to london leaving after 09:00",
             "metadata": {}},
            {"text": "your taxi is on the way .",
             "metadata": {
                 "taxi": {
                     "book": {"booked": []},
                     "semi": {"leaveAt": "09:00", "destination": "london",
                              "departure": "cambridge", "arriveBy": ""},
                 },
             }},
        ],
    },
}

FIXTURE_ACTS = {
    "AAA0001": {
        "1": {"Restaurant-Request": [["Food", "?"]]},
        "2": {"Booking-Book": [["Ref", "00000"]]},
    },
    "BBB0002": {
        "1": {"Hotel-Recommend": [["Name", "alpha lodge"]]},
        "2": "No Annotation",
    },
    "CCC0003": {
        "1": "No Annotation",
    },
}


def write_fixture_corpus(root: Path) -> Path:
    root.mkdir(parents=True, exist_ok=True)
    (root / "data.json").write_text(json.dumps(FIXTURE_DATA), encoding="utf-8")
    (root / "dialogue_acts.json").write_text(json.dumps(FIXTURE_ACTS),
                                             encoding="utf-8")
    # One list as plain lines, one as a JSON array: both occur in the wild.
    (root / "valListFile.json").write_text("BBB0002.json\n", encoding="utf-8")
    (root / "testListFile.json").write_text(json.dumps(["CCC0003.json"]),
                                            encoding="utf-8")
    return root


@pytest.fixture(scope="session")
def fixture_root(tmp_path_factory) -> Path:
    return write_fixture_corpus(tmp_path_factory.mktemp("fixture") / "corpus")


@pytest.fixture(scope="session")
def fixture_splits(fixture_root):
    return load_all_splits(fixture_root)


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("toy") / "corpus"
    write_toy_corpus(root, ToyDataConfig())
    return root


@pytest.fixture(scope="session")
def toy_splits(toy_root):
    return load_all_splits(toy_root)


LEARN_CONFIG = ToyDataConfig(n_train=150, n_dev=40, n_test=40,
                             paraphrase_rate=0.05, heldout_value_rate=0.10,
                             seed=11)


@pytest.fixture(scope="session")
def learn_root(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("learn") / "corpus"
    write_toy_corpus(root, LEARN_CONFIG)
    return root


@pytest.fixture(scope="session")
def learn_splits(learn_root):
    return load_all_splits(learn_root)


@pytest.fixture(scope="session")
def real_root() -> Path:
    """Directory of the real corpus distribution, when available."""
    root = os.environ.get(DATA_ENV_VAR)
    if not root:
        pytest.skip(f"{DATA_ENV_VAR} not set; real-corpus checks need the "
                    f"original dataset distribution")
    path = Path(root)
    if not (path / "data.json").exists():
        pytest.skip(f"{DATA_ENV_VAR}={root} has no data.json")
    return path
