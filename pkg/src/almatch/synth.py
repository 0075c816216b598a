"""Synthetic product-catalog benchmark for end-to-end runs and tests.

Generates candidate pairs shaped like the output of a blocking stage over a
fake electronics catalog. Every product is described by several vendor
listings (typos, dropped tokens, abbreviations, price jitter, missing
values), and pairs reuse those listings the way blocking reuses records:
positives are two listings of one product, hard negatives come from the
same brand+category block, easy negatives cross blocks. Products arrive in
series of near-miss variants, so a block holds several products that agree
on everything but model code and trim. The reuse makes the pool redundant
on purpose: one confusing listing or product series surfaces in many pairs
at once.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from almatch.dataset import CandidatePair, Record

BRANDS = [
    "Soniq", "Vextar", "Lumetra", "Qorvex", "Nimbal", "Zentrix", "Parago",
    "Kelvon", "Ardent", "Mirelle", "Tovani", "Brightline", "Octavo", "Fenwick",
    "Halcyon", "Durex Labs", "Polaric", "Streamway", "Cobalt Works", "Verity",
]

CATEGORIES = {
    "laptop": ["Notebook", "Ultrabook", "Laptop", "Convertible"],
    "monitor": ["Monitor", "Display", "Screen"],
    "keyboard": ["Keyboard", "Mechanical Keyboard", "Wireless Keyboard"],
    "headphones": ["Headphones", "Earbuds", "Headset"],
    "camera": ["Camera", "Mirrorless Camera", "Action Camera"],
    "printer": ["Printer", "Laser Printer", "Inkjet Printer"],
    "router": ["Router", "Mesh Router", "Access Point"],
    "tablet": ["Tablet", "Slate", "E-Reader"],
}

QUALIFIERS = [
    "Professional", "Compact", "Ultra", "Classic", "Advanced", "Essential",
    "Performance", "Signature", "Prime", "Studio", "Portable", "Gaming",
]

COLORS = ["black", "white", "silver", "graphite", "blue", "red", "slate"]

ABBREVIATIONS = {
    "Professional": "Pro", "Advanced": "Adv", "Performance": "Perf",
    "Compact": "Cmpct", "Essential": "Ess", "Signature": "Sig",
    "Wireless": "WL", "Mechanical": "Mech", "Portable": "Port",
}

ATTRS = ("title", "brand", "model", "price", "category")


def _make_catalog(n_products: int, rng: np.random.Generator) -> list[dict[str, str]]:
    """Products arrive in series of 2-5 near-miss variants.

    A series shares brand, category, noun, and model-code prefix; variants
    differ in trim (qualifier, color), model digits, and price. Blocking on
    brand+category therefore yields negatives that disagree only in
    fine-grained tokens.
    """
    products: list[dict[str, str]] = []
    cats = sorted(CATEGORIES)
    while len(products) < n_products:
        brand = BRANDS[int(rng.integers(len(BRANDS)))]
        cat = cats[int(rng.integers(len(cats)))]
        noun = CATEGORIES[cat][int(rng.integers(len(CATEGORIES[cat])))]
        series = f"{chr(65 + int(rng.integers(26)))}{chr(65 + int(rng.integers(26)))}"
        base_price = float(rng.uniform(40, 2200))
        batch = min(2 + int(rng.integers(4)), n_products - len(products))
        for _ in range(batch):
            qual = QUALIFIERS[int(rng.integers(len(QUALIFIERS)))]
            model = f"{series}-{int(rng.integers(100, 9999))}"
            color = COLORS[int(rng.integers(len(COLORS)))]
            price = base_price * float(rng.uniform(0.7, 1.4))
            products.append(
                {
                    "title": f"{brand} {qual} {noun} {model} {color}",
                    "brand": brand,
                    "model": model,
                    "price": f"{price:.2f}",
                    "category": cat,
                }
            )
    return products


def _typo(word: str, rng: np.random.Generator) -> str:
    if len(word) < 3:
        return word
    i = int(rng.integers(len(word) - 1))
    op = int(rng.integers(3))
    if op == 0:  # swap
        return word[:i] + word[i + 1] + word[i] + word[i + 2:]
    if op == 1:  # drop
        return word[:i] + word[i + 1:]
    return word[:i] + word[i] + word[i:]  # double


def _corrupt(product: dict[str, str], rng: np.random.Generator, n_ops: int | None = None) -> dict[str, str]:
    """A plausibly messy re-listing of the same product."""
    out = dict(product)
    if n_ops is None:
        n_ops = 1 + int(rng.integers(4))
    for _ in range(n_ops):
        op = int(rng.integers(7))
        if op == 0:  # drop a title token
            tokens = out["title"].split()
            if len(tokens) > 2:
                del tokens[int(rng.integers(len(tokens)))]
                out["title"] = " ".join(tokens)
        elif op == 1:  # typo in a title token
            tokens = out["title"].split()
            j = int(rng.integers(len(tokens)))
            tokens[j] = _typo(tokens[j], rng)
            out["title"] = " ".join(tokens)
        elif op == 2:  # abbreviate known words
            tokens = [ABBREVIATIONS.get(t, t) for t in out["title"].split()]
            out["title"] = " ".join(tokens)
        elif op == 3:  # price jitter or reformat
            try:
                price = float(out["price"])
            except ValueError:
                continue
            if rng.random() < 0.5:
                price *= float(1 + rng.uniform(-0.06, 0.06))
            out["price"] = f"{price:.0f}" if rng.random() < 0.5 else f"{price:.2f}"
        elif op == 4:  # blank an attribute
            field = ATTRS[int(rng.integers(len(ATTRS)))]
            if field != "title":
                out[field] = ""
        elif op == 5:  # fat-finger one digit of the model field
            digits = [i for i, ch in enumerate(out["model"]) if ch.isdigit()]
            if digits:
                i = digits[int(rng.integers(len(digits)))]
                out["model"] = out["model"][:i] + str(int(rng.integers(10))) + out["model"][i + 1:]
        else:  # shuffle title word order
            tokens = out["title"].split()
            order = rng.permutation(len(tokens))
            out["title"] = " ".join(tokens[i] for i in order)
    return out


def _record(rid: str, product: dict[str, str]) -> Record:
    return Record(rid, tuple((a, product[a]) for a in ATTRS))


def make_benchmark(
    n_pairs: int = 5000,
    pos_frac: float = 0.10,
    hard_neg_frac: float = 0.6,
    seed: int = 0,
) -> list[CandidatePair]:
    """Candidate pairs over a generated catalog, labels included.

    Most products get 2-4 vendor listings; a small popular slice gets 10-24,
    so those products dominate the pool the way bestsellers dominate real
    blocking output. Every pair is built from those fixed listings, and a
    fifth of the listings come from messy vendors that stack many
    corruptions at once.
    ``hard_neg_frac`` of the negatives share brand and category with their
    partner, which is what keeps the task from being solvable by brand
    matching alone.
    """
    rng = np.random.default_rng(seed)
    n_pos = int(round(n_pairs * pos_frac))
    n_neg = n_pairs - n_pos
    catalog = _make_catalog(max(n_pairs // 16, 16), rng)

    # fixed vendor renderings, reused across every pair that mentions them
    listing_attrs: list[dict[str, str]] = []
    per_product: list[list[int]] = []
    for product in catalog:
        popular = rng.random() < 0.03
        count = 10 + int(rng.integers(15)) if popular else 2 + int(rng.integers(3))
        mine = []
        for v in range(count):
            if v == 0 and rng.random() < 0.5:
                attrs = product
            else:
                # a fifth of vendors are sloppy and stack corruptions
                n_ops = 4 + int(rng.integers(4)) if rng.random() < 0.2 else 1 + int(rng.integers(3))
                attrs = _corrupt(product, rng, n_ops)
            mine.append(len(listing_attrs))
            listing_attrs.append(attrs)
        per_product.append(mine)

    def listing_of(prod: int) -> int:
        mine = per_product[prod]
        return mine[int(rng.integers(len(mine)))]

    by_key: dict[tuple[str, str], list[int]] = {}
    for i, product in enumerate(catalog):
        by_key.setdefault((product["brand"], product["category"]), []).append(i)
    hard_keys = [k for k, members in by_key.items() if len(members) >= 2]
    # blocks and products weighted by listing count: pairing records, not
    # products, is what makes popular items flood the hard negatives too
    block_w = np.array(
        [sum(len(per_product[m]) for m in by_key[k]) for k in hard_keys], dtype=float
    )
    block_p = block_w / block_w.sum() if hard_keys else None

    # positives: distinct within-product listing combos, topped up with
    # fresh listings if a small catalog runs out of combos
    combos: list[tuple[int, int]] = []
    for prod, mine in enumerate(per_product):
        for x in range(len(mine)):
            for y in range(x + 1, len(mine)):
                combos.append((mine[x], mine[y]))
    queue = [combos[i] for i in rng.permutation(len(combos))]

    pairs: list[CandidatePair] = []
    width = len(str(n_pairs))
    for i in range(n_pos):
        pid = f"p{i:0{width}d}"
        if queue:
            la, lb = queue.pop()
        else:
            prod = int(rng.integers(len(catalog)))
            la = listing_of(prod)
            lb = len(listing_attrs)
            listing_attrs.append(_corrupt(catalog[prod], rng))
            per_product[prod].append(lb)
        pairs.append(
            CandidatePair(pid, _record(f"{pid}_l", listing_attrs[la]), _record(f"{pid}_r", listing_attrs[lb]), 1)
        )

    seen: set[tuple[int, int]] = set()
    i = 0
    while i < n_neg:
        pid = f"n{i:0{width}d}"
        if hard_keys and rng.random() < hard_neg_frac:
            members = by_key[hard_keys[int(rng.choice(len(hard_keys), p=block_p))]]
            w = np.array([len(per_product[m]) for m in members], dtype=float)
            a, b = rng.choice(len(members), size=2, replace=False, p=w / w.sum())
            prod_a, prod_b = members[a], members[b]
        else:
            prod_a, prod_b = rng.choice(len(catalog), size=2, replace=False)
        la, lb = listing_of(int(prod_a)), listing_of(int(prod_b))
        key = (min(la, lb), max(la, lb))
        if key in seen:
            # exhausted combos for this draw; a fresh listing keeps it hard
            lb = len(listing_attrs)
            listing_attrs.append(_corrupt(catalog[int(prod_b)], rng))
            per_product[int(prod_b)].append(lb)
            key = (min(la, lb), max(la, lb))
        seen.add(key)
        pairs.append(
            CandidatePair(pid, _record(f"{pid}_l", listing_attrs[la]), _record(f"{pid}_r", listing_attrs[lb]), 0)
        )
        i += 1
    order = rng.permutation(len(pairs))
    return [pairs[i] for i in order]


def write_pairs_csv(pairs: list[CandidatePair], path: str | Path) -> None:
    """CSV in the load_candidate_pairs layout (id, label, left_*/right_*)."""
    if not pairs:
        raise ValueError("no pairs to write")
    attrs = [name for name, _ in pairs[0].left.attributes]
    header = ["id", "label"] + [f"left_{a}" for a in attrs] + [f"right_{a}" for a in attrs]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for pair in pairs:
            left = dict(pair.left.attributes)
            right = dict(pair.right.attributes)
            writer.writerow(
                [pair.pair_id, "" if pair.ground_truth is None else pair.ground_truth]
                + [left[a] for a in attrs]
                + [right[a] for a in attrs]
            )
