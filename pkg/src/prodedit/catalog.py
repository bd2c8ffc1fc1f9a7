"""Product catalog ingestion, validation, and stratified sampling.

Catalog files are UTF-8 JSON lines, one product per line, with the field
names of :class:`ProductRecord`. Unknown fields are ignored on load.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import DuplicateProductIdError, SampleSizeError

logger = logging.getLogger(__name__)


class Category(str, Enum):
    """The five product categories the corpus is drawn from."""

    CLOTHING_SHOES_JEWELRY = "ClothingShoesJewelry"
    ELECTRONICS = "Electronics"
    HOME_KITCHEN = "HomeKitchen"
    INDUSTRIAL_SCIENTIFIC = "IndustrialScientific"
    SPORTS_OUTDOORS = "SportsOutdoors"

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self]


_DISPLAY_NAMES = {
    Category.CLOTHING_SHOES_JEWELRY: "Clothing Shoes and Jewelry",
    Category.ELECTRONICS: "Electronics",
    Category.HOME_KITCHEN: "Home and Kitchen",
    Category.INDUSTRIAL_SCIENTIFIC: "Industrial and Scientific",
    Category.SPORTS_OUTDOORS: "Sports and Outdoors",
}


@dataclass(frozen=True)
class ProductRecord:
    product_id: str
    title: str
    category: Category
    description: str = ""
    details: dict[str, str] = field(default_factory=dict)
    image_uri: str | None = None

    def to_dict(self) -> dict:
        d = {
            "product_id": self.product_id,
            "title": self.title,
            "category": self.category.value,
            "description": self.description,
            "details": dict(self.details),
        }
        if self.image_uri is not None:
            d["image_uri"] = self.image_uri
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProductRecord":
        return cls(
            product_id=str(d["product_id"]),
            title=str(d["title"]),
            category=Category(d["category"]),
            description=str(d.get("description", "")),
            details={str(k): str(v) for k, v in (d.get("details") or {}).items()},
            image_uri=d.get("image_uri"),
        )


@dataclass(frozen=True)
class Violation:
    """One failed invariant on a record; field name plus the broken rule."""

    field: str
    rule: str


@dataclass(frozen=True)
class LineError:
    line_number: int
    message: str


def validate_record(record: ProductRecord) -> list[Violation]:
    """Return all invariant violations for a record (empty list means valid)."""
    violations = []
    if not record.product_id:
        violations.append(Violation("product_id", "must be nonempty"))
    if not record.title:
        violations.append(Violation("title", "must be nonempty"))
    if not isinstance(record.category, Category):
        violations.append(Violation("category", "must be one of the five categories"))
    for key in record.details:
        if not key:
            violations.append(Violation("details", "attribute names must be nonempty"))
            break
    return violations


def load_catalog(
    path: str | Path, errors: list[LineError] | None = None
) -> list[ProductRecord]:
    """Load all parseable, valid records from a JSONL catalog file.

    Malformed lines and records failing validation are skipped and logged;
    pass ``errors`` to collect them. A duplicate ``product_id`` is fatal.
    """
    records: list[ProductRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                record = ProductRecord.from_dict(raw)
            except (ValueError, KeyError, TypeError) as exc:
                err = LineError(lineno, f"malformed record: {exc}")
                logger.warning("%s line %d: %s", path, lineno, err.message)
                if errors is not None:
                    errors.append(err)
                continue
            if record.product_id in seen:
                raise DuplicateProductIdError(record.product_id)
            violations = validate_record(record)
            if violations:
                err = LineError(
                    lineno,
                    "invalid record: "
                    + "; ".join(f"{v.field}: {v.rule}" for v in violations),
                )
                logger.warning("%s line %d: %s", path, lineno, err.message)
                if errors is not None:
                    errors.append(err)
                continue
            seen.add(record.product_id)
            records.append(record)
    return records


def write_catalog(records: list[ProductRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


def sample_products(
    catalog: list[ProductRecord], n: int, seed: int
) -> list[ProductRecord]:
    """Sample ``n`` records without replacement, stratified by category.

    Deterministic in ``seed``; per-category counts stay within one item of
    exact proportionality.
    """
    if n > len(catalog):
        raise SampleSizeError(f"requested {n} of {len(catalog)} records")
    if n < 0:
        raise SampleSizeError("sample size must be non-negative")
    total = len(catalog)
    if total == 0:
        return []
    rng = random.Random(seed)
    by_category: dict[Category, list[ProductRecord]] = {}
    for record in catalog:
        by_category.setdefault(record.category, []).append(record)

    # Largest-remainder apportionment keeps each stratum within +-1 of
    # n * count/total while the takes sum to exactly n.
    categories = sorted(by_category, key=lambda c: c.value)
    quotas = {c: n * len(by_category[c]) / total for c in categories}
    takes = {c: int(quotas[c]) for c in categories}
    remainder = n - sum(takes.values())
    for c in sorted(categories, key=lambda c: quotas[c] - takes[c], reverse=True):
        if remainder == 0:
            break
        if takes[c] < len(by_category[c]):
            takes[c] += 1
            remainder -= 1
    while remainder > 0:  # only reachable when some stratum is exhausted
        for c in categories:
            if remainder > 0 and takes[c] < len(by_category[c]):
                takes[c] += 1
                remainder -= 1

    sampled: list[ProductRecord] = []
    for c in categories:
        sampled.extend(rng.sample(by_category[c], takes[c]))
    return sampled
