#!/usr/bin/env python3
"""Writes the planted synthetic dataset (open-domain layout).

20 documents, 10 dev conversations, a 50-question pool. Topic i owns three
keywords. Its request and its linked document use them; its planted question
shares two of them. Decoy questions share one keyword or only filler words.

Usage: gen_synthetic.py OUT_DIR
"""
import random
import sys
from pathlib import Path

TOPICS = [
    ("volcano", "basalt", "magma"),
    ("glacier", "moraine", "crevasse"),
    ("violin", "sonata", "concerto"),
    ("telescope", "nebula", "quasar"),
    ("sourdough", "yeast", "baker"),
    ("falcon", "raptor", "talon"),
    ("cipher", "enigma", "cryptogram"),
    ("orchid", "pollen", "greenhouse"),
    ("marathon", "sprint", "stamina"),
    ("lighthouse", "harbor", "beacon"),
]

FILLER = (
    "people often talk about many things during long afternoons while the town "
    "keeps moving along its quiet streets and every visitor finds some small "
    "detail worth remembering after the trip ends"
).split()

GENERIC_DECOYS = [
    "Do you want to learn a new language?",
    "Would you like to know more about weekend plans?",
    "Are you looking for a refund on your order?",
    "Do you want to reset your account password?",
    "Would you like to learn about delivery times?",
    "Are you asking about the price of a ticket?",
    "Do you want to know the store opening hours?",
    "Would you like to learn about local weather?",
    "Are you interested in a gift card?",
    "Do you want to change the size of an item?",
    "Would you like to know about shipping costs?",
    "Are you looking for a cheap hotel nearby?",
    "Do you want to learn a simple recipe?",
    "Would you like information about parking?",
    "Are you asking about a membership plan?",
    "Do you want to know about student discounts?",
    "Would you like to learn about public holidays?",
    "Are you looking for a phone number?",
    "Do you want to book a table for dinner?",
    "Would you like to know about the return policy?",
]


def filler(rng, n):
    return " ".join(rng.choice(FILLER) for _ in range(n))


def main():
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240613)

    docs = []
    for i, (a, b, c) in enumerate(TOPICS):
        parts = []
        for _ in range(8):
            parts.append(f"{filler(rng, 10)} {a} {b} {c} {filler(rng, 6)}.")
        docs.append((f"doc-{i:02d}", " ".join(parts)))
    for i in range(10):
        parts = [f"{filler(rng, 14)}." for _ in range(8)]
        docs.append((f"doc-{10 + i:02d}", " ".join(parts)))

    pool = []
    rows = []
    decoys = iter(GENERIC_DECOYS)
    for i, (a, b, c) in enumerate(TOPICS):
        planted = f"q{i:02d}-0"
        pool.append((planted, f"Are you interested in {a} and {b} facts?"))
        pool.append((f"q{i:02d}-1", f"Do you need {a} photos for children?"))
        pool.append((f"q{i:02d}-2", f"Is this about a {c} museum ticket?"))
        pool.append((f"q{i:02d}-3", next(decoys)))
        pool.append((f"q{i:02d}-4", next(decoys)))
        request = f"I want to learn about {a} {b} {c}"
        rows.append((f"t{i:02d}", request, planted, pool[-5][1], f"yes, {a} and {b} please"))

    with open(out / "documents.tsv", "w") as f:
        for d, t in docs:
            f.write(f"{d}\t{t}\n")
    with open(out / "question_bank.tsv", "w") as f:
        for q, t in pool:
            f.write(f"{q}\t{t}\n")
    with open(out / "dev.tsv", "w") as f:
        f.write("topic_id\tinitial_request\tquestion_id\tquestion\tanswer\n")
        for r in rows:
            f.write("\t".join(r) + "\n")
    with open(out / "links.tsv", "w") as f:
        for i in range(len(TOPICS)):
            f.write(f"t{i:02d}\tdoc-{i:02d}\n")
    with open(out / "planted.tsv", "w") as f:
        for i in range(len(TOPICS)):
            f.write(f"t{i:02d}\tq{i:02d}-0\n")


if __name__ == "__main__":
    main()
