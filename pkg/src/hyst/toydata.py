"""Deterministic synthetic corpora in the standard on-disk dialogue format.

The generator writes a complete corpus directory (``data.json``,
``dialogue_acts.json``, split list files) whose dialogues are built from
small templated scenarios over a few dozen values.  The point is not
linguistic realism but controlled coverage of the tracking problem:

* most values are mentioned verbatim by the user, so they are recoverable
  from the dialogue text;
* a configurable fraction are paraphrased ("somewhere high end" for
  ``expensive``), which no span-based candidate can recover;
* dev and test dialogues occasionally use values never seen in training;
* agent turns sometimes introduce a value themselves (an offer the user
  accepts), so text from both speakers matters;
* raw annotation files use the messy surface conventions of the format:
  casing variants, ``"not mentioned"``, dontcare spelling variants, a
  ``police`` block that is not tracked, and ``"No Annotation"`` acts.

Gold states only ever grow: a slot, once set, keeps its value for the rest
of the dialogue.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import BOOK_SLOTS, DOMAINS, SEMI_SLOTS

_FOODS = ("italian", "chinese", "indian", "british")
_AREAS = ("north", "south", "east", "west", "centre")
_PRICES = ("cheap", "moderate", "expensive")
_DAYS = ("monday", "tuesday", "friday", "saturday", "sunday")
_TIMES = ("09:00", "12:15", "17:30", "18:00", "19:45")
_REST_NAMES = ("golden palace", "blue spice", "curry garden")
_HOTEL_NAMES = ("alpha lodge", "city stop")
_HOTEL_TYPES = ("hotel", "guesthouse")
_STARS = ("3", "4", "5")
_STAYS = ("1", "2", "3")
_PEOPLE = ("1", "2", "4", "6")
_ATTR_TYPES = ("museum", "park", "cinema")
_ATTR_NAMES = ("old mill", "fun land")
_PLACES = ("cambridge", "london", "norwich", "ely")
_DEPARTMENTS = ("cardiology", "neurology")

# Restatements that avoid the value's own tokens, so the value cannot be
# recovered from any span of the dialogue text.
_PARAPHRASES = {
    "expensive": "somewhere high end",
    "cheap": "a budget option",
    "centre": "the middle of town",
    "italian": "food from italy",
    "guesthouse": "a small family run place",
    "museum": "somewhere with exhibits",
}

# Values reserved for dev/test dialogues, so they are out of vocabulary for
# anything fit on training data.
_HELDOUT_ONLY = {
    "restaurant.food": "korean",
    "attraction.type": "theatre",
}

_ACK_POOL = (
    "okay , i can help with that .",
    "sure , let me look that up .",
    "no problem . anything else ?",
    "alright , i have a few options for you .",
)

_DONTCARE_FORMS = ("dontcare", "dont care", "don't care", "do n't care")
_UNSET_FORMS = ("", "not mentioned")


@dataclass
class ToyDataConfig:
    """Shape and noise knobs for a generated corpus."""

    n_train: int = 60
    n_dev: int = 20
    n_test: int = 20
    seed: int = 7
    paraphrase_rate: float = 0.08
    dontcare_rate: float = 0.06
    offer_rate: float = 0.10
    heldout_value_rate: float = 0.15
    no_annotation_rate: float = 0.10

    def __post_init__(self):
        if min(self.n_train, self.n_dev, self.n_test) < 1:
            raise ValueError("each split needs at least one dialogue")


@dataclass
class _Step:
    """One user/system exchange: the user text, the slots it sets, the
    system's act annotation, and optionally a scripted system reply."""

    text: str
    sets: dict
    act: object = None  # dict of act -> [[slot, value], ...] | "No Annotation"
    sys_text: str | None = None


def _mention(rng: random.Random, cfg: ToyDataConfig, value: str,
             template: str) -> tuple[str, str]:
    """Render a value mention; sometimes paraphrase it away."""
    if value in _PARAPHRASES and rng.random() < cfg.paraphrase_rate:
        return _PARAPHRASES[value], value
    return template.format(value), value


def _restaurant_steps(rng, cfg, heldout: bool) -> list[_Step]:
    food = rng.choice(_FOODS)
    if heldout and rng.random() < cfg.heldout_value_rate:
        food = _HELDOUT_ONLY["restaurant.food"]
    area = rng.choice(_AREAS)
    steps = []
    food_text, _ = _mention(rng, cfg, food, "i want a restaurant serving {} food")
    if rng.random() < cfg.dontcare_rate:
        steps.append(_Step(
            text=f"{food_text} and the area does not matter to me",
            sets={"restaurant.food": food, "restaurant.area": "dontcare"},
            act={"Restaurant-Inform": [["Food", food], ["Area", "dontcare"]]}))
    else:
        area_text, _ = _mention(rng, cfg, area, "in the {} part of town")
        steps.append(_Step(
            text=f"{food_text} {area_text}",
            sets={"restaurant.food": food, "restaurant.area": area},
            act={"Restaurant-Inform": [["Food", food], ["Area", area]]}))
    price = rng.choice(_PRICES)
    price_text, _ = _mention(rng, cfg, price, "i would like something {}")
    steps.append(_Step(
        text=price_text,
        sets={"restaurant.pricerange": price},
        act={"Restaurant-Inform": [["Price", price]]}))
    name = rng.choice(_REST_NAMES)
    if rng.random() < cfg.offer_rate:
        # The agent proposes the place; only its turn mentions the name.
        steps[-1].sys_text = f"how about {name} ?"
        steps[-1].act = {"Restaurant-Recommend": [["Name", name]]}
        steps.append(_Step(
            text="yes that sounds perfect",
            sets={"restaurant.name": name},
            act={"Booking-Inform": [["none", "none"]]}))
    else:
        steps.append(_Step(
            text=f"is {name} available ?",
            sets={"restaurant.name": name},
            act={"Restaurant-Inform": [["Name", name]]}))
    people, day, time = rng.choice(_PEOPLE), rng.choice(_DAYS), rng.choice(_TIMES)
    steps.append(_Step(
        text=f"book a table for {people} people on {day} at {time}",
        sets={"restaurant.people": people, "restaurant.day": day,
              "restaurant.time": time},
        act={"Booking-Book": [["People", people], ["Day", day], ["Time", time]]}))
    return steps


def _hotel_steps(rng, cfg, heldout: bool) -> list[_Step]:
    kind = rng.choice(_HOTEL_TYPES)
    kind_text, _ = _mention(rng, cfg, kind, "i am looking for a {} to stay at")
    steps = [_Step(text=kind_text, sets={"hotel.type": kind},
                   act={"Hotel-Inform": [["Type", kind]]})]
    stars = rng.choice(_STARS)
    parking = rng.choice(("yes", "no"))
    parking_text = ("it must have free parking" if parking == "yes"
                    else "i do not need parking")
    steps.append(_Step(
        text=f"{parking_text} and it should have {stars} stars",
        sets={"hotel.parking": parking, "hotel.stars": stars},
        act={"Hotel-Inform": [["Parking", parking], ["Stars", stars]]}))
    if rng.random() < cfg.dontcare_rate:
        steps.append(_Step(
            text="i do not care about the price range",
            sets={"hotel.pricerange": "dontcare"},
            act={"Hotel-Inform": [["Price", "dontcare"]]}))
    else:
        price = rng.choice(_PRICES)
        price_text, _ = _mention(rng, cfg, price, "something {} please")
        steps.append(_Step(
            text=price_text, sets={"hotel.pricerange": price},
            act={"Hotel-Inform": [["Price", price]]}))
    name = rng.choice(_HOTEL_NAMES)
    people, day, stay = rng.choice(_PEOPLE), rng.choice(_DAYS), rng.choice(_STAYS)
    steps.append(_Step(
        text=f"book the {name} for {people} people starting {day} for {stay} nights",
        sets={"hotel.name": name, "hotel.people": people, "hotel.day": day,
              "hotel.stay": stay},
        act={"Booking-Book": [["Name", name], ["People", people],
                              ["Day", day], ["Stay", stay]]}))
    return steps


def _attraction_steps(rng, cfg, heldout: bool) -> list[_Step]:
    kind = rng.choice(_ATTR_TYPES)
    if heldout and rng.random() < cfg.heldout_value_rate:
        kind = _HELDOUT_ONLY["attraction.type"]
    area = rng.choice(_AREAS)
    kind_text, _ = _mention(rng, cfg, kind, "i want to visit a {}")
    area_text, _ = _mention(rng, cfg, area, "in the {}")
    steps = [_Step(
        text=f"{kind_text} {area_text}",
        sets={"attraction.type": kind, "attraction.area": area},
        act={"Attraction-Inform": [["Type", kind], ["Area", area]]})]
    name = rng.choice(_ATTR_NAMES)
    if rng.random() < cfg.offer_rate:
        steps[-1].sys_text = f"you could try {name} ."
        steps[-1].act = {"Attraction-Recommend": [["Name", name]]}
        steps.append(_Step(
            text="great , tell me more about it",
            sets={"attraction.name": name},
            act={"general-reqmore": [["none", "none"]]}))
    else:
        steps.append(_Step(
            text=f"what can you tell me about {name} ?",
            sets={"attraction.name": name},
            act={"Attraction-Inform": [["Name", name]]}))
    return steps


def _journey_steps(rng, cfg, domain: str) -> list[_Step]:
    """Shared template for the train, taxi, and bus domains."""
    depart, dest = rng.sample(_PLACES, 2)
    word = {"train": "train", "taxi": "taxi", "bus": "bus"}[domain]
    steps = [_Step(
        text=f"i need a {word} from {depart} to {dest}",
        sets={f"{domain}.departure": depart, f"{domain}.destination": dest},
        act={f"{domain.capitalize()}-Inform": [["Depart", depart],
                                               ["Dest", dest]]})]
    time = rng.choice(_TIMES)
    if rng.random() < 0.5:
        clause, slot = f"it should leave after {time}", f"{domain}.leaveAt"
        act_slot = "Leave"
    else:
        clause, slot = f"i need to arrive by {time}", f"{domain}.arriveBy"
        act_slot = "Arrive"
    sets = {slot: time}
    act_pairs = [[act_slot, time]]
    if domain in ("train", "bus"):
        day = rng.choice(_DAYS)
        clause = f"{clause} on {day}"
        sets[f"{domain}.day"] = day
        act_pairs.append(["Day", day])
    steps.append(_Step(text=clause, sets=sets,
                       act={f"{domain.capitalize()}-Inform": act_pairs}))
    if domain in ("train", "bus"):
        people = rng.choice(_PEOPLE)
        steps.append(_Step(
            text=f"book {people} tickets please",
            sets={f"{domain}.people": people},
            act={f"{domain.capitalize()}-OfferBooked": [["People", people]]}))
    return steps


def _hospital_steps(rng, cfg) -> list[_Step]:
    dept = rng.choice(_DEPARTMENTS)
    return [_Step(
        text=f"i need the {dept} department of the hospital",
        sets={"hospital.department": dept},
        act={"Hospital-Inform": [["Department", dept]]})]


# Scenario menu with rough frequency weights.
_SCENARIOS = (
    ("restaurant", 5), ("hotel", 5), ("attraction", 3), ("train", 4),
    ("taxi", 2), ("hospital", 1), ("bus", 1),
    ("restaurant+attraction", 2), ("hotel+taxi", 2),
)


def _scenario_steps(rng, cfg, scenario: str, heldout: bool) -> list[_Step]:
    steps = []
    for part in scenario.split("+"):
        if part == "restaurant":
            steps.extend(_restaurant_steps(rng, cfg, heldout))
        elif part == "hotel":
            steps.extend(_hotel_steps(rng, cfg, heldout))
        elif part == "attraction":
            steps.extend(_attraction_steps(rng, cfg, heldout))
        elif part == "hospital":
            steps.extend(_hospital_steps(rng, cfg))
        else:
            steps.extend(_journey_steps(rng, cfg, part))
    return steps


def _raw_value(rng: random.Random, value: str) -> str:
    """The surface form written into metadata, exercising normalization."""
    if value == "dontcare":
        return rng.choice(_DONTCARE_FORMS)
    roll = rng.random()
    if roll < 0.08 and value.isalpha():
        return value.title()
    if roll < 0.12:
        return f" {value} "
    return value


def _metadata(rng: random.Random, state: dict) -> dict:
    md = {}
    for domain in DOMAINS:
        semi = {}
        for slot in SEMI_SLOTS[domain]:
            value = state.get(f"{domain}.{slot}")
            semi[slot] = _raw_value(rng, value) if value else rng.choice(_UNSET_FORMS)
        book = {"booked": []}
        for slot in BOOK_SLOTS[domain]:
            value = state.get(f"{domain}.{slot}")
            book[slot] = _raw_value(rng, value) if value else ""
        md[domain] = {"book": book, "semi": semi}
    # Untracked domain, present in the raw format and ignored by ingestion.
    md["police"] = {"book": {"booked": []}, "semi": {}}
    return md


def _assemble(rng: random.Random, cfg: ToyDataConfig,
              steps: list[_Step]) -> tuple[dict, dict]:
    log = []
    acts = {}
    state: dict = {}
    for i, step in enumerate(steps, start=1):
        state.update(step.sets)
        log.append({"text": step.text, "metadata": {}})
        sys_text = step.sys_text or rng.choice(_ACK_POOL)
        if i == len(steps):
            sys_text = "you are all set . goodbye !"
        log.append({"text": sys_text, "metadata": _metadata(rng, state)})
        if step.act is None or rng.random() < cfg.no_annotation_rate:
            acts[str(i)] = "No Annotation"
        else:
            acts[str(i)] = step.act
    return {"goal": {}, "log": log}, acts


def write_toy_corpus(root, config: ToyDataConfig | None = None) -> Path:
    """Generate a corpus directory; returns its path.

    Dialogues are keyed ``SYN0001.json`` onward, training first, then the
    dev and test blocks named by the split list files (one written as plain
    lines, one as a JSON array, both of which occur in the wild).
    """
    cfg = config or ToyDataConfig()
    rng = random.Random(cfg.seed)
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    names, weights = zip(*_SCENARIOS)
    data = {}
    acts = {}
    n_total = cfg.n_train + cfg.n_dev + cfg.n_test
    for idx in range(n_total):
        heldout = idx >= cfg.n_train
        scenario = rng.choices(names, weights=weights, k=1)[0]
        steps = _scenario_steps(rng, cfg, scenario, heldout)
        dialogue_id = f"SYN{idx + 1:04d}.json"
        record, act_record = _assemble(rng, cfg, steps)
        data[dialogue_id] = record
        acts[dialogue_id[:-5]] = act_record
    ids = sorted(data)
    dev_ids = ids[cfg.n_train: cfg.n_train + cfg.n_dev]
    test_ids = ids[cfg.n_train + cfg.n_dev:]
    (root / "data.json").write_text(
        json.dumps(data, indent=1, sort_keys=True), encoding="utf-8")
    (root / "dialogue_acts.json").write_text(
        json.dumps(acts, indent=1, sort_keys=True), encoding="utf-8")
    (root / "valListFile.json").write_text(
        "\n".join(dev_ids) + "\n", encoding="utf-8")
    (root / "testListFile.json").write_text(
        json.dumps(test_ids, indent=1), encoding="utf-8")
    return root
