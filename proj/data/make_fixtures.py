#!/usr/bin/env python3
# Copyright 2026 The Forge Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the seed CSV fixtures. Output is deterministic."""

import csv
import pathlib
import random

HERE = pathlib.Path(__file__).resolve().parent

BRANDS = ["Acme", "Lumina", "Northwind", "Zephyr", "Orbit", "Kestrel", "Tundra",
          "Nimbus", "Solace", "Vertex", "Halcyon", "Quill", "Marrow", "Pinecrest"]
ADJ = ["wireless", "organic", "stainless", "portable", "vintage", "waterproof",
       "compact", "ergonomic", "cotton", "leather", "bamboo", "ceramic", "foldable",
       "insulated", "rechargeable", "adjustable"]
NOUNS = ["headphones", "kettle", "backpack", "lamp", "blender", "jacket", "notebook",
         "charger", "mug", "keyboard", "tent", "sneakers", "speaker", "wallet",
         "thermos", "umbrella", "desk", "pillow"]
EXTRAS = ["set of 2", "large", "black", "with case", "for kids", "travel size",
          "2024 model", "blue", "pack of 3", "with cable"]
ACCESSORY = {"headphones": "ear cushions", "kettle": "descaler", "backpack": "rain cover",
             "lamp": "bulb", "blender": "jar", "jacket": "hanger", "notebook": "pen",
             "charger": "cable", "mug": "coaster", "keyboard": "wrist rest",
             "tent": "stakes", "sneakers": "laces", "speaker": "stand",
             "wallet": "keychain", "thermos": "brush", "umbrella": "sleeve",
             "desk": "mat", "pillow": "case"}
PHRASES = ["Works exactly as described", "Broke after two weeks", "Great value for the price",
           "Smaller than I expected", "My kids love it", "Shipping took forever",
           "Feels premium and sturdy", "Would not buy again", "Perfect gift",
           "Battery life is impressive", "Color faded quickly", "Easy to set up"]


def main():
    rng = random.Random(20240601)
    catalog = {}

    def product(brand, adj, noun, extra):
        title = f"{brand} {adj} {noun}" + (f", {extra}" if extra else "")
        if title not in catalog:
            catalog[title] = (f"P{len(catalog):05d}", brand)
        return title

    esci = []
    queries = set()
    while len(queries) < 80:
        adj, noun = rng.choice(ADJ), rng.choice(NOUNS)
        query = f"{adj} {noun}"
        if query in queries:
            continue
        queries.add(query)
        rows = {}
        for _ in range(rng.randint(1, 3)):
            rows[product(rng.choice(BRANDS), adj, noun, rng.choice(EXTRAS + [""]))] = "E"
        for _ in range(rng.randint(2, 4)):
            t = product(rng.choice(BRANDS), rng.choice([a for a in ADJ if a != adj]), noun, "")
            rows.setdefault(t, "S")
        for _ in range(rng.randint(1, 2)):
            t = product(rng.choice(BRANDS), adj, ACCESSORY[noun], "")
            rows.setdefault(t, "C")
        for _ in range(rng.randint(1, 3)):
            t = product(rng.choice(BRANDS), rng.choice(ADJ), rng.choice([n for n in NOUNS if n != noun]), "")
            rows.setdefault(t, "I")
        for title, label in rows.items():
            pid, brand = catalog[title]
            esci.append({"query": query, "product_id": pid, "title": title,
                         "description": f"{title}. Ships from {brand}.",
                         "brand": brand, "esci_label": label, "locale": "us"})

    with open(HERE / "esci.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(esci[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(esci)

    titles = sorted(catalog)
    reviewed = rng.sample(titles, 50)
    reviews = []
    for title in reviewed:
        for _ in range(rng.randint(2, 6)):
            a, b = rng.sample(PHRASES, 2)
            reviews.append({"product_title": title, "review_text": f"{a}. {b}.",
                            "rating": rng.randint(1, 5), "helpful_votes": rng.randint(0, 40)})
    with open(HERE / "reviews.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(reviews[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(reviews)

    sessions = []
    for _ in range(120):
        clicks = rng.sample(titles, rng.randint(2, 6))
        purchased = rng.choice([t for t in titles if t not in clicks])
        sessions.append({"clicked_titles": "|".join(clicks), "purchased_title": purchased})
    with open(HERE / "sessions.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(sessions[0].keys()), lineterminator="\n")
        w.writeheader()
        w.writerows(sessions)


if __name__ == "__main__":
    main()
