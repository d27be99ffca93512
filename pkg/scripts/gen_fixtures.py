#!/usr/bin/env python3
"""Regenerate the bundled end-to-end fixtures in fixtures/.

The corpus is hand-authored with planted structure: one exact string
duplicate (caught by the prefilter), one high-similarity paraphrase pair
(match band), one ambiguous pair resolved by the judge table, two blocked
domains, one low-scoring page, one missing page, one empty page, and one
sleep query whose top candidates contradict the wish so the validation
pass has something to remove.

After writing the files the script runs the full pipeline in a temp dir and
asserts every planted behavior, so a drift in fixtures or code fails
loudly here before it confuses a test run.
"""

from __future__ import annotations

import json
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

SLEEP_WISH = "I want to wake up feeling refreshed every morning"

# (key, url as it appears in SERP, title, snippet, query_id)
SERP_ROWS = [
    ("water", "https://www.healthyhabits.example/30-day-water-challenge?utm_source=serp&utm_campaign=x", "30-Day Water Challenge", "Stay hydrated for a month with daily goals.", "q01"),
    ("water-dup", "https://www.healthyhabits.example/30-day-water-challenge", "30-Day Water Challenge", "Stay hydrated for a month.", "q01"),
    ("youtube", "https://www.youtube.com/watch?v=dQw4w9WgXcQ", "30 day challenge video", "Watch this challenge video.", "q01"),
    ("pinterest", "https://pinterest.com/pin/998877", "Challenge board", "Pins about challenges.", "q02"),
    ("fitlife", "https://fitlife.example/run-every-day", "Run Every Day for 30 Days", "A month of daily running.", "q02"),
    ("calmcorner", "https://calmcorner.example/meditation-challenges", "Daily Meditation Challenges", "Calm your mind in 30 days.", "q03"),
    ("bookworm", "https://bookworm.example/reading-challenge", "The 30-Day Reading Challenge", "Read more this month.", "q03"),
    ("kitchen", "https://kitchen.example/cooking-challenges", "Cooking Challenges for a Month", "New meals every day.", "q04"),
    ("sleepwell", "https://sleepwell.example/sleep-hygiene-month", "Sleep Hygiene Month", "Better sleep in 30 days.", "q05"),
    ("pennywise", "https://pennywise.example/budget-challenge", "30-Day Budget Challenge", "Take control of spending.", "q06"),
    ("zenpath", "https://zenpath.example/gratitude-journal", "Gratitude Journal Challenge", "Thirty days of thanks.", "q07"),
    ("springclean", "https://springclean.example/declutter-month", "Declutter Month", "One small space at a time.", "q08"),
    ("plantpower", "https://plantpower.example/veggie-month", "Veggie Month Challenge", "Eat more plants.", "q09"),
    ("clickbait", "https://clickbait.example/listicle-of-everything", "37 Things You Must Do", "You will not believe #12.", "q10"),
    ("ghost", "https://ghost.example/vanished-page", "Vanished Challenge Page", "This page no longer exists.", "q10"),
    ("stepcount", "http://stepcount.example:80/walking-challenge/", "Walking Challenge", "Steps every day.", "q11"),
    ("tricks", "https://pinterest.com.tricks.example/not-actually-pinterest", "Totally Real Challenges", "Nothing suspicious here.", "q11"),
    ("empty", "https://empty.example/blank", "Blank Page", "Nothing to see.", "q11"),
    ("financefreedom", "https://financefreedom.example/savings-tips", "Savings Tips", "General advice, no challenges.", "q06"),
]

# normalized URLs, as the pipeline sees them after ingest
URL = {
    "water": "https://www.healthyhabits.example/30-day-water-challenge",
    "fitlife": "https://fitlife.example/run-every-day",
    "calmcorner": "https://calmcorner.example/meditation-challenges",
    "bookworm": "https://bookworm.example/reading-challenge",
    "kitchen": "https://kitchen.example/cooking-challenges",
    "sleepwell": "https://sleepwell.example/sleep-hygiene-month",
    "pennywise": "https://pennywise.example/budget-challenge",
    "zenpath": "https://zenpath.example/gratitude-journal",
    "springclean": "https://springclean.example/declutter-month",
    "plantpower": "https://plantpower.example/veggie-month",
    "clickbait": "https://clickbait.example/listicle-of-everything",
    "ghost": "https://ghost.example/vanished-page",
    "stepcount": "http://stepcount.example/walking-challenge",
    "tricks": "https://pinterest.com.tricks.example/not-actually-pinterest",
    "empty": "https://empty.example/blank",
    "financefreedom": "https://financefreedom.example/savings-tips",
}

PAGE_SCORES = {
    URL["water"]: 9,
    URL["fitlife"]: 8,
    URL["calmcorner"]: 8,
    URL["bookworm"]: 7,
    URL["kitchen"]: 9,
    URL["sleepwell"]: 8,
    URL["pennywise"]: 7,
    URL["zenpath"]: 7,
    URL["springclean"]: 6,
    URL["plantpower"]: 7,
    URL["stepcount"]: 8,
    URL["financefreedom"]: 7,
    URL["clickbait"]: 3,
    URL["tricks"]: 5,
}

# per page: list of (title, description, wish, daily_action)
EXTRACT_ITEMS = {
    "water": [
        ("30-Day Water Challenge",
         "Carry a refillable bottle and log every glass in a tracker so the habit sticks by week two.",
         "I want to stay hydrated", "Drink 8 glasses of water"),
        ("Morning Hydration Kickstart", "",
         "I want more energy in the morning", "Drink a glass of water right after you wake up"),
        ("Hydration Myths Debunked", "An article section, not an actual challenge.",
         "", "Read about hydration"),
    ],
    "fitlife": [
        ("Run a Mile a Day", "Start slow, keep a steady pace, and rest if your legs complain.",
         "I want to get fit", "Run a mile every day"),
        ("Evening Jog Month", "Twenty relaxed minutes after work clears the head.",
         "I want to build stamina", "Jog for twenty minutes each evening"),
        ("Push-up Pyramid", "",
         "I want a stronger upper body", "Do twenty push ups before breakfast"),
    ],
    "calmcorner": [
        ("Morning Meditation Month",
         "Sit comfortably before breakfast, follow the breath, and let thoughts pass without judgment for the full ten minutes.",
         "I want to feel calmer", "Meditate for ten minutes in the morning"),
        ("Daily Mindfulness Sit", "A short daily sit.",
         "I want to be more mindful", "Meditate for ten minutes every single morning"),
        ("Box Breathing Basics", "Four counts in, four held, four out, four held.",
         "I want to manage stress", "Practice box breathing for five minutes"),
    ],
    "bookworm": [
        ("Twenty Pages a Day", "Any book counts; the page count is what builds the habit.",
         "I want to read more", "Read 20 pages every day"),
        ("Short Story Nights", "",
         "I want to read before bed", "Read one short story each night"),
    ],
    "kitchen": [
        ("New Meal Month",
         "Pick the recipe the night before, shop once a week, and cook something you have never made.",
         "I want to cook more at home", "Cook a new meal every day"),
        ("Recipe Explorer", "Try something unfamiliar.",
         "I want to be a better cook", "Try a brand new recipe every day"),
        ("Homemade Lunch Streak", "Prep in the evening to dodge the takeout line.",
         "I want to eat out less", "Pack a homemade lunch"),
    ],
    "sleepwell": [
        ("Consistent Bedtime Challenge",
         "A fixed lights-out time anchors your body clock, which is what actually makes mornings feel rested.",
         "I want to sleep better", "Go to bed at the same time to wake up refreshed"),
        ("Early Riser Month", "Set the alarm half an hour earlier than usual.",
         "I want more morning hours", "Wake up 30 minutes earlier every morning"),
        ("5am Club Trial", "",
         "I want to join the early risers", "Wake up at 5am every morning"),
        ("Screen Curfew", "Blue light late in the evening pushes sleep later.",
         "I want to fall asleep faster", "No screens after 9pm"),
        ("Gentle Morning Stretch", "Two minutes of easy stretching beats the snooze button.",
         "I want easier mornings", "Stretch gently every morning to wake up easier"),
    ],
    "pennywise": [
        ("Expense Tracking Month", "Every coffee, every fare, every impulse: write it down.",
         "I want to control my spending", "Track every expense"),
        ("Purchase Notebook", "",
         "I want to understand where money goes", "Record all purchases in a notebook"),
    ],
    "zenpath": [
        ("Three Good Things", "Specific beats generic: name the moment, not just the mood.",
         "I want to be more grateful", "Write down three things you are grateful for"),
        ("Thank-You Note Month", "",
         "I want to appreciate people more", "Send one thank you note"),
    ],
    "springclean": [
        ("One Drawer a Day", "Small spaces keep the momentum going.",
         "I want a tidier home", "Declutter one drawer or shelf"),
        ("Donation Box Challenge", "",
         "I want less clutter", "Donate one unused item"),
    ],
    "plantpower": [
        ("Veggie Every Meal", "Frozen counts, canned counts; just get a vegetable on the plate.",
         "I want to eat healthier", "Eat a vegetable with every meal"),
        ("Meatless Dinner Month", "",
         "I want to eat less meat", "Prepare a meatless dinner"),
    ],
    "stepcount": [
        ("Ten Thousand Steps", "Split it across the day; three brisk walks usually get you there.",
         "I want to move more", "Walk 10000 steps"),
        ("Lunch Walk Habit", "",
         "I want a break from my desk", "Take a ten minute walk after lunch"),
        ("Hydration Side Quest", "Walking more means drinking more.",
         "I want to stay hydrated while active", "Drink 8 glasses of water!!"),
    ],
    "financefreedom": [],
}

# page key -> extraction ids, in pipeline order (water is first in SERP order)
EXPECTED_IDS = {
    "water": ["c00001", "c00002"],            # third item is rejected (empty wish)
    "fitlife": ["c00003", "c00004", "c00005"],
    "calmcorner": ["c00006", "c00007", "c00008"],
    "bookworm": ["c00009", "c00010"],
    "kitchen": ["c00011", "c00012", "c00013"],
    "sleepwell": ["c00014", "c00015", "c00016", "c00017", "c00018"],
    "pennywise": ["c00019", "c00020"],
    "zenpath": ["c00021", "c00022"],
    "springclean": ["c00023", "c00024"],
    "plantpower": ["c00025", "c00026"],
    "stepcount": ["c00027", "c00028", "c00029"],
}

PAIR_DUPLICATES = [
    # the planted ambiguous pair, resolved as duplicate
    {"a": "Cook a new meal every day", "b": "Try a brand new recipe every day", "duplicate": True},
    # canonical non-duplicate lookup used by unit tests
    {"a": "wake up at 6am", "b": "go to bed at 10pm", "duplicate": False},
]

VALIDATE_FLAGS = [
    {"wish": SLEEP_WISH, "daily_action": "Wake up 30 minutes earlier every morning", "relevant": False},
    {"wish": SLEEP_WISH, "daily_action": "Wake up at 5am every morning", "relevant": False},
    # canonical insufficient-data lookup used by unit tests
    {"wish": "I want to prepare for the SAT", "daily_action": "Sit at the breakfast table", "relevant": False},
]

LABELED_QUERIES = [
    {"id": "g01", "tier": "general", "text": "I want to drink more water every day",
     "relevant_ids": ["c00001", "c00002"]},
    {"id": "g02", "tier": "general", "text": "I want to feel calmer and less stressed",
     "relevant_ids": ["c00006", "c00008"]},
    {"id": "g03", "tier": "general", "text": "I want to read more books every night",
     "relevant_ids": ["c00009", "c00010"]},
    {"id": "g04", "tier": "general", "text": "I want to save money every month",
     "relevant_ids": ["c00019", "c00020"]},
    {"id": "f01", "tier": "fairly_specific", "text": SLEEP_WISH,
     "relevant_ids": ["c00014", "c00018"]},
    {"id": "f02", "tier": "fairly_specific", "text": "I want to cook a new meal every day",
     "relevant_ids": ["c00011"]},
    {"id": "f03", "tier": "fairly_specific", "text": "I want to write down three things I am grateful for",
     "relevant_ids": ["c00021"]},
    {"id": "f04", "tier": "fairly_specific", "text": "I want to track every expense in a notebook",
     "relevant_ids": ["c00019", "c00020"]},
    {"id": "u01", "tier": "ultra_specific", "text": "I want to run one mile every single day this month",
     "relevant_ids": ["c00003"]},
    {"id": "u02", "tier": "ultra_specific", "text": "I want to meditate for ten minutes every morning",
     "relevant_ids": ["c00006"]},
    {"id": "u03", "tier": "ultra_specific", "text": "I want to walk ten thousand steps every day",
     "relevant_ids": ["c00027", "c00028"]},
    {"id": "u04", "tier": "ultra_specific", "text": "I want to declutter one drawer at a time",
     "relevant_ids": ["c00023"]},
    {"id": "u05", "tier": "ultra_specific", "text": "I want to prepare for the SAT",
     "relevant_ids": []},
]


def page_html(key: str, title: str) -> str:
    items = EXTRACT_ITEMS.get(key, [])
    lis = "\n".join(
        f"      <li><strong>{t}</strong>: {a}. {d}</li>" for t, d, _w, a in items
    )
    return f"""<html>
<head>
  <title>{title}</title>
  <style>body {{ font-family: serif; }}</style>
</head>
<body>
  <header><nav>Home | Challenges | About</nav></header>
  <article>
    <h1>{title}</h1>
    <p>Pick one idea and stick with it for thirty days.</p>
    <ul>
{lis}
    </ul>
  </article>
  <footer>newsletter signup</footer>
  <script>analytics.track("pageview");</script>
</body>
</html>
"""


def write_fixtures() -> None:
    FIXTURES.mkdir(exist_ok=True)

    with open(FIXTURES / "serp_results.jsonl", "w", encoding="utf-8") as fh:
        for _key, url, title, snippet, qid in SERP_ROWS:
            fh.write(json.dumps(
                {"query_id": qid, "url": url, "title": title, "snippet": snippet},
                ensure_ascii=False, sort_keys=True) + "\n")

    with open(FIXTURES / "pages.jsonl", "w", encoding="utf-8") as fh:
        for key, url in URL.items():
            if key == "ghost":
                continue
            if key == "empty":
                html = "<html><body><script>nothing()</script></body></html>"
            else:
                title = next(t for k, _u, t, _s, _q in SERP_ROWS if k == key)
                html = page_html(key, title)
            fh.write(json.dumps({"url": url, "html": html}, ensure_ascii=False, sort_keys=True) + "\n")

    table = {
        "page_filter": PAGE_SCORES,
        "challenge_extract": {
            URL[key]: [
                {"title": t, "description": d, "wish": w, "daily_action": a}
                for t, d, w, a in items
            ]
            for key, items in EXTRACT_ITEMS.items()
        },
        "pair_duplicate": PAIR_DUPLICATES,
        "search_validate": VALIDATE_FLAGS,
    }
    with open(FIXTURES / "judge_table.json", "w", encoding="utf-8") as fh:
        json.dump(table, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")

    with open(FIXTURES / "labeled_queries.jsonl", "w", encoding="utf-8") as fh:
        for q in LABELED_QUERIES:
            fh.write(json.dumps(q, ensure_ascii=False, sort_keys=True) + "\n")


def verify() -> None:
    from challengeforge.config import Config, DEFAULTS
    from challengeforge.dedup import BAND_AMBIGUOUS, BAND_MATCH, band_of
    from challengeforge.model import read_challenges_jsonl
    from challengeforge.pipeline import run_pipeline, DEDUPED, REMOVED_MAP, MANIFEST
    from challengeforge.providers import build_providers
    import copy
    import numpy as np

    tmp = Path(tempfile.mkdtemp(prefix="fixture-verify-"))
    try:
        for name in ("serp_results.jsonl", "pages.jsonl", "judge_table.json", "labeled_queries.jsonl"):
            shutil.copy(FIXTURES / name, tmp / name)
        raw = copy.deepcopy(DEFAULTS)
        raw["paths"].update(
            serp=["serp_results.jsonl"], pages="pages.jsonl",
            queries="labeled_queries.jsonl", out_dir="out",
        )
        raw["providers"]["judge"]["table"] = "judge_table.json"
        cfg = Config(raw=raw, base_dir=tmp)
        providers = build_providers(cfg.providers, seed=cfg.seed, base_dir=cfg.base_dir)

        results = run_pipeline(cfg, providers)
        c = results["collect"]
        assert c["raw_results"] == 19 and c["unique_urls"] == 18, c
        assert c["blocked"] == 2 and c["missing"] == 1 and c["empty"] == 1, c
        assert c["documents"] == 14, c
        f = results["filter"]
        assert f["kept"] == 12 and f["dropped"] == 2 and f["failed"] == 0, f
        e = results["extract"]
        assert e["accepted"] == 29 and e["rejected"] == 1 and e["zero_yield"] == 1, e

        # extraction ids land exactly where the labeled queries expect
        challenges = read_challenges_jsonl(tmp / "out" / "challenges.jsonl")
        by_id = {ch.id: ch for ch in challenges}
        for key, ids in EXPECTED_IDS.items():
            actions = [a for _t, _d, w, a in EXTRACT_ITEMS[key] if w]
            assert [by_id[i].daily_action for i in ids] == actions, (key, ids)

        # planted band structure, checked against the real embedder
        def sim(a: str, b: str) -> float:
            v = providers.embedder.embed_batch([a, b])
            return float(v[0] @ v[1])

        match_pair = sim("Meditate for ten minutes in the morning",
                         "Meditate for ten minutes every single morning")
        ambiguous_pair = sim("Cook a new meal every day", "Try a brand new recipe every day")
        assert band_of(match_pair, 0.625, 0.7) == BAND_MATCH, match_pair
        assert band_of(ambiguous_pair, 0.625, 0.7) == BAND_AMBIGUOUS, ambiguous_pair

        d = results["dedup"]
        assert d["input"] == 29 and d["output"] == 26, d
        assert d["prefilter_removed"] == 1, d
        removed = {}
        with open(tmp / "out" / REMOVED_MAP, encoding="utf-8") as fh:
            for line in fh:
                row = json.loads(line)
                removed[row["removed_id"]] = (row["kept_id"], row["stage"])
        assert removed == {
            "c00029": ("c00001", "prefilter"),
            "c00007": ("c00006", "cluster"),
            "c00012": ("c00011", "cluster"),
        }, removed

        deduped = read_challenges_jsonl(tmp / "out" / DEDUPED)
        survivor_ids = {ch.id for ch in deduped}
        for q in LABELED_QUERIES:
            assert set(q["relevant_ids"]) <= survivor_ids, q["id"]

        # the validation pass must strictly improve the sleep query at k=3
        # and never hurt any query
        with open(tmp / "out" / "eval_report.json", encoding="utf-8") as fh:
            report = json.load(fh)
        rows = {(r["query_id"], r["config"]): r for r in report["rows"]}
        assert rows[("f01", "validated")]["f3"] > rows[("f01", "unvalidated")]["f3"], (
            rows[("f01", "validated")]["f3"], rows[("f01", "unvalidated")]["f3"])
        for q in LABELED_QUERIES:
            v, u = rows[(q["id"], "validated")], rows[(q["id"], "unvalidated")]
            assert v["f3"] >= u["f3"], (q["id"], v["f3"], u["f3"])
        agg = report["aggregates"]
        assert agg["validated"]["overall"]["f3"] > agg["unvalidated"]["overall"]["f3"]

        print("verified fixture pipeline:")
        print("  serp 19 -> unique 18 -> blocked 2 -> fetched 14 -> filtered 12")
        print(f"  extracted 29 (+1 rejected, 1 zero-yield page) -> deduped 26")
        print(f"  match pair sim {match_pair:.4f}, ambiguous pair sim {ambiguous_pair:.4f}")
        print(f"  f01 F1@3 validated {rows[('f01', 'validated')]['f3']:.3f} "
              f"> unvalidated {rows[('f01', 'unvalidated')]['f3']:.3f}")
        print(f"  overall F1@3 validated {agg['validated']['overall']['f3']:.3f} "
              f">= unvalidated {agg['unvalidated']['overall']['f3']:.3f}")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


if __name__ == "__main__":
    write_fixtures()
    verify()
    print(f"fixtures written to {FIXTURES}")
