"""Synthetic report generator with planted structural defects.

Builds markdown reports from a seeded RNG together with the exact multiset
of violations the structural auditor must find. Defect fingerprints use the
same shape as tests apply to auditor output: ``(rule, discriminator...)``.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from reporteval.lint import StructuralViolation

WORDS = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliet kilo lima "
    "mike november oscar papa quebec romeo sierra tango uniform victor whiskey "
    "xray yankee zulu market policy growth analysis systems region outlook"
).split()

DEFECT_KINDS = (
    "skip",
    "dup_number",
    "dup_source",
    "orphan",
    "unresolved",
    "dup_section",
    "broken_table",
    "bold_heading",
)


@dataclass
class PlantedReport:
    text: str
    expected: list[tuple]


def violation_fingerprint(violation: StructuralViolation) -> tuple:
    """Canonical identity of a violation for multiset comparison."""
    if violation.rule_id == "P9":
        return ("P9", "table" if "table" in violation.detail else "bold")
    if violation.rule_id == "P10":
        if "skipped" in violation.detail:
            return ("P10", "skip", violation.entity)
        if "different sources" in violation.detail:
            return ("P10", "dup-number", violation.entity)
        return ("P10", "dup-source", violation.entity)
    if violation.rule_id == "P5":
        return ("P5",)
    return (violation.rule_id, violation.entity)


def _sentence(rng: random.Random, citations: list[int]) -> str:
    words = [rng.choice(WORDS) for _ in range(rng.randint(5, 10))]
    words[0] = words[0].capitalize()
    text = " ".join(words)
    for number in citations:
        text += f" [{number}]"
    return text + "."


def _valid_table(rng: random.Random) -> list[str]:
    return [
        "| Segment | Share |",
        "| --- | --- |",
        f"| {rng.choice(WORDS)} | {rng.randint(1, 80)}% |",
        f"| {rng.choice(WORDS)} | {rng.randint(1, 80)}% |",
    ]


def _broken_table(rng: random.Random) -> list[str]:
    return [
        "| Segment | Share | Trend |",
        "| --- | --- | --- |",
        f"| {rng.choice(WORDS)} | {rng.randint(1, 80)}% |",
    ]


def generate_report(rng: random.Random) -> PlantedReport:
    expected: list[tuple] = []
    n_refs = rng.randint(5, 9)
    numbers = list(range(1, n_refs + 1))
    urls = {n: f"https://example.org/src-{rng.randint(100, 999)}-{n}" for n in numbers}
    labels = {n: f"Source {n} overview" for n in numbers}
    uncited: set[int] = set()
    extra_entries: list[tuple[int, str, str]] = []

    defects: list[str] = []
    if rng.random() >= 0.2:  # roughly one clean report in five
        defects = rng.sample(DEFECT_KINDS, rng.randint(1, 4))

    if "skip" in defects and n_refs >= 4:
        gap = rng.randint(2, n_refs - 1)
        numbers.remove(gap)
        expected.append(("P10", "skip", str(gap)))
    if "dup_number" in defects:
        dup = rng.choice(numbers)
        extra_entries.append((dup, f"Alternate source {dup}", f"https://example.org/alt-{dup}"))
        expected.append(("P10", "dup-number", str(dup)))
    if "dup_source" in defects:
        candidates = [n for n in numbers if not any(n == e[0] for e in extra_entries)]
        if len(candidates) >= 2:
            first, second = rng.sample(candidates, 2)
            urls[second] = urls[first]
            expected.append(("P10", "dup-source", urls[first]))
    if "orphan" in defects:
        taken = {e[0] for e in extra_entries}
        candidates = [n for n in numbers if n not in taken and urls[n] not in
                      {urls[m] for m in numbers if m != n}]
        if candidates:
            orphan = rng.choice(candidates)
            uncited.add(orphan)
            # a duplicated reference section lists the orphan twice
            copies = 2 if "dup_section" in defects else 1
            expected.extend([("P3", str(orphan))] * copies)

    citable = [n for n in numbers if n not in uncited]
    rng.shuffle(citable)
    unresolved: int | None = None
    if "unresolved" in defects:
        unresolved = max(numbers) + rng.randint(5, 20)
        expected.append(("P4", str(unresolved)))

    # Body: every citable number appears at least once.
    lines = ["# Synthetic Research Report", "", _sentence(rng, []), ""]
    pending = list(citable)
    if unresolved is not None:
        pending.insert(rng.randrange(len(pending) + 1), unresolved)
    section_index = 0
    while pending or section_index == 0:
        section_index += 1
        lines.append(f"## Section {section_index}")
        lines.append("")
        for _ in range(rng.randint(2, 4)):
            batch = [pending.pop() for _ in range(min(len(pending), rng.randint(0, 2)))]
            lines.append(_sentence(rng, batch))
        lines.append("")
        if section_index > 8:
            break
    while pending:  # overflow guard: flush any stragglers into the last section
        lines.append(_sentence(rng, [pending.pop()]))

    if "bold_heading" in defects:
        lines.extend(["**Supplementary Notes**", "", _sentence(rng, []), ""])
        expected.append(("P9", "bold"))
    if rng.random() < 0.5:
        lines.extend(_valid_table(rng) + [""])
    if "broken_table" in defects:
        lines.extend(_broken_table(rng) + [""])
        expected.append(("P9", "table"))

    entry_lines = [f"[{n}] {labels[n]} {urls[n]}" for n in numbers]
    entry_lines += [f"[{n}] {label} {url}" for n, label, url in extra_entries]
    lines.extend(["## References", ""] + entry_lines + [""])
    if "dup_section" in defects:
        lines.extend(["## Sources", ""] + entry_lines + [""])
        expected.append(("P5",))

    return PlantedReport(text="\n".join(lines), expected=expected)


def generate_corpus(seed: int, count: int) -> list[PlantedReport]:
    rng = random.Random(seed)
    return [generate_report(rng) for _ in range(count)]
