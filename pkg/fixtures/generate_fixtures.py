"""Regenerate the shipped offline fixtures.

Writes catalog_25.jsonl, transcripts.jsonl, expected.json, toy_model.bin and
run_config.yaml into this directory. The transcript scripts every backend
call the pipeline makes over the 25-product catalog, so `prodedit
build-benchmark` runs fully offline and deterministically.

Run from the repo root:  python3 fixtures/generate_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

from prodedit import prompts
from prodedit.backends import clear_transcript_cache, record_completion
from prodedit.catalog import Category, ProductRecord, write_catalog
from prodedit.model import ModelConfig, TinyTransformer
from prodedit.pipeline import INTENTION_PREFIX, association_statement, Claim

HERE = Path(__file__).parent

STUDENT = "student-a"
JUDGE = "judge-x"
SCORER = "scorer-v"
CORRECTOR = "corrector-c"

# Wrong-claim script: product_id -> per-claim scripting. Feature claims list
# (text, judge_response); the judge response decides correctness. Wrong
# claims additionally carry concepts [(text, score)], a corrector completion,
# a locality sentence, and portability replacements per subject.
CATALOG = [
    # --- Clothing Shoes and Jewelry ---
    {
        "product_id": "B0CLOTH001",
        "title": "Alpine Trail Merino Wool Hiking Socks 3-Pack",
        "category": Category.CLOTHING_SHOES_JEWELRY,
        "description": "Cushioned crew socks knit from soft merino wool.",
        "details": {"Material": "Merino Wool", "Size": "L"},
    },
    {
        "product_id": "B0CLOTH002",
        "title": "Harbor Lane Classic Leather Belt, Brown",
        "category": Category.CLOTHING_SHOES_JEWELRY,
        "description": "Full-grain leather belt with a brushed nickel buckle.",
        "details": {"Material": "Leather", "Width": "1.5 inches"},
    },
    {
        "product_id": "B0CLOTH003",
        "title": "Summit Peak Waterproof Rain Jacket",
        "category": Category.CLOTHING_SHOES_JEWELRY,
        "description": "Packable rain shell with taped seams and a hood.",
        "details": {"Material": "Nylon", "Closure": "Zipper"},
    },
    {
        "product_id": "B0CLOTH004",
        "title": "Sterling Silver Braided Chain Necklace 18 Inch",
        "category": Category.CLOTHING_SHOES_JEWELRY,
        "description": "Braided chain necklace in polished sterling silver.",
        "details": {"Material": "Sterling Silver", "Length": "18 inches"},
    },
    {
        "product_id": "B0CLOTH005",
        "title": "Canvas Low-Top Casual Sneakers, Unisex",
        "category": Category.CLOTHING_SHOES_JEWELRY,
        "description": "Everyday low-top sneakers with a vulcanized rubber sole.",
        "details": {"Material": "Canvas", "Sole": "Rubber"},
    },
    # --- Electronics ---
    {
        "product_id": "B0ELEC001",
        "title": "JBL Reference 410 Headphone -Black",
        "category": Category.ELECTRONICS,
        "description": "Over-ear wired headphones tuned for reference listening.",
        "details": {"Connector": "3.5mm", "Color": "Black"},
    },
    {
        "product_id": "B0ELEC002",
        "title": '2020 Lenovo V330 15.6" FHD Business Laptop Computer',
        "category": Category.ELECTRONICS,
        "description": "Business laptop with a quad-core processor and 12GB RAM.",
        "details": {"Screen Size": "15.6 inches", "RAM": "12GB"},
    },
    {
        "product_id": "B0ELEC003",
        "title": "Voltcraft 20000mAh USB-C Power Bank",
        "category": Category.ELECTRONICS,
        "description": "High-capacity power bank with 20W fast charging.",
        "details": {"Capacity": "20000mAh", "Ports": "2"},
    },
    {
        "product_id": "B0ELEC004",
        "title": "ClearView 1080p USB Webcam with Microphone",
        "category": Category.ELECTRONICS,
        "description": "Plug-and-play webcam with a built-in stereo microphone.",
        "details": {"Resolution": "1080p", "Interface": "USB"},
    },
    {
        "product_id": "B0ELEC005",
        "title": "PocketBeam Mini LED Projector",
        "category": Category.ELECTRONICS,
        "description": "Compact LED projector for movies and presentations.",
        "details": {"Brightness": "200 lumens", "Weight": "0.4 kg"},
    },
    # --- Home and Kitchen ---
    {
        "product_id": "B0HOME001",
        "title": "Vev Vigano Eco Ceramic Nonstick Frying Pan",
        "category": Category.HOME_KITCHEN,
        "description": "Frying pan with an eco-friendly ceramic nonstick coating.",
        "details": {"Material": "Ceramic", "Diameter": "28 cm"},
        "image_uri": "file://fixtures/images/frying_pan.jpg",
    },
    {
        "product_id": "B0HOME002",
        "title": "Winsome Wood Assembled Set of 2 Kids Chairs, White",
        "category": Category.HOME_KITCHEN,
        "description": "Set of two fixed-height wooden chairs for children.",
        "details": {"Material": "Solid Wood", "Color": "White"},
    },
    {
        "product_id": "B0HOME003",
        "title": "RED or BLUE or GREEN Silicone Microwave Popcorn Popper CUCINA LAURA",
        "category": Category.HOME_KITCHEN,
        "description": "Collapsible silicone popcorn popper for microwave use.",
        "details": {"Material": "Silicone", "Capacity": "15 cups"},
    },
    {
        "product_id": "B0HOME004",
        "title": "Northwind 1.7L Electric Glass Kettle",
        "category": Category.HOME_KITCHEN,
        "description": "Glass kettle with auto shutoff and blue LED light.",
        "details": {"Capacity": "1.7 L", "Power": "1500W"},
    },
    {
        "product_id": "B0HOME005",
        "title": "Maplecraft Bamboo Cutting Board Set of 3",
        "category": Category.HOME_KITCHEN,
        "description": "Three bamboo cutting boards in graduated sizes.",
        "details": {"Material": "Bamboo", "Pieces": "3"},
    },
    # --- Industrial and Scientific ---
    {
        "product_id": "B0INDU001",
        "title": "PrecisionLab Digital Calipers 0-150mm",
        "category": Category.INDUSTRIAL_SCIENTIFIC,
        "description": "Stainless digital calipers with 0.01mm resolution.",
        "details": {"Range": "0-150mm", "Material": "Stainless Steel"},
    },
    {
        "product_id": "B0INDU002",
        "title": "SafeGrip Nitrile Work Gloves, Box of 100",
        "category": Category.INDUSTRIAL_SCIENTIFIC,
        "description": "Disposable nitrile gloves, powder free, size M.",
        "details": {"Material": "Nitrile", "Count": "100"},
    },
    {
        "product_id": "B0INDU003",
        "title": "TorqueMaster 40-Piece Hex Bit Socket Set",
        "category": Category.INDUSTRIAL_SCIENTIFIC,
        "description": "Chrome vanadium hex bit sockets with storage rail.",
        "details": {"Pieces": "40", "Material": "Chrome Vanadium"},
    },
    {
        "product_id": "B0INDU004",
        "title": "LabServe Borosilicate Beaker Set 50-1000ml",
        "category": Category.INDUSTRIAL_SCIENTIFIC,
        "description": "Five graduated borosilicate glass beakers.",
        "details": {"Material": "Borosilicate Glass", "Pieces": "5"},
    },
    {
        "product_id": "B0INDU005",
        "title": "DuraSeal Industrial PTFE Thread Tape 10-Pack",
        "category": Category.INDUSTRIAL_SCIENTIFIC,
        "description": "PTFE thread seal tape for plumbing and gas fittings.",
        "details": {"Material": "PTFE", "Count": "10"},
    },
    # --- Sports and Outdoors ---
    {
        "product_id": "B0SPOR001",
        "title": "TrailBlazer 2-Person Backpacking Tent",
        "category": Category.SPORTS_OUTDOORS,
        "description": "Lightweight dome tent with aluminum poles.",
        "details": {"Capacity": "2 person", "Weight": "2.1 kg"},
    },
    {
        "product_id": "B0SPOR002",
        "title": "AquaGlide Insulated Stainless Water Bottle 750ml",
        "category": Category.SPORTS_OUTDOORS,
        "description": "Double-wall insulated bottle keeps drinks cold 24 hours.",
        "details": {"Capacity": "750 ml", "Material": "Stainless Steel"},
    },
    {
        "product_id": "B0SPOR003",
        "title": "ProForm Adjustable Jump Rope with Ball Bearings",
        "category": Category.SPORTS_OUTDOORS,
        "description": "Speed rope with adjustable cable and bearing handles.",
        "details": {"Length": "3 m", "Handle": "Aluminum"},
    },
    {
        "product_id": "B0SPOR004",
        "title": "RidgeLine Carbon Trekking Poles, Pair",
        "category": Category.SPORTS_OUTDOORS,
        "description": "Collapsible carbon fiber trekking poles with cork grips.",
        "details": {"Material": "Carbon Fiber", "Weight": "230 g each"},
    },
    {
        "product_id": "B0SPOR005",
        "title": "SwiftKick Training Soccer Ball Size 5",
        "category": Category.SPORTS_OUTDOORS,
        "description": "Machine-stitched training ball for grass and turf.",
        "details": {"Size": "5", "Material": "Synthetic Leather"},
    },
]

# Default (correct) student outputs for products without a script.
DEFAULT_FEATURES = ["Durable construction", "Lightweight design", "Easy to maintain"]


def default_intention(title: str) -> str:
    return f"{INTENTION_PREFIX} use the {title} for its intended everyday purpose"


# Wrong-claim scripts. "index" is the feature line index that the judge
# rejects (features only).
WRONG = {
    "B0ELEC001": {
        "kind": "intention",
        "claim": f"{INTENTION_PREFIX} listen to music and take calls",
        "judge": (
            "No. The model provides a basic understanding of the product's "
            "functionality but fails to capture what distinguishes these "
            "headphones. Corrected: To enjoy high-quality audio for immersive "
            "listening experiences"
        ),
        "correction": "To enjoy high-quality audio for immersive listening experiences",
        "concepts": [("over-ear reference headphones", 0.85)],
    },
    "B0ELEC002": {
        "kind": "feature",
        "index": 1,
        "claim": "Up to 4GB RAM",
        "judge": "No. This laptop has 12GB RAM, not 4GB. Corrected: Up to 12GB RAM",
        "correction": "Up to 12GB RAM",
        "concepts": [("Business Laptop", 0.9)],
    },
    "B0HOME001": {
        "kind": "feature",
        "index": 0,
        "claim": "Durable Construction: The pan is made from high-quality stainless steel.",
        "judge": (
            "No. The pan features an eco-friendly ceramic nonstick surface, "
            "not stainless steel. Corrected: Durable Eco-Friendly Ceramic Coating"
        ),
        "correction": (
            "Durable Eco-Friendly Ceramic Coating: The pan features a "
            "high-quality eco-friendly ceramic nonstick surface."
        ),
        "concepts": [("Stainless Steel Cookware", 0.12), ("Ceramic Frying Pan", 0.88)],
    },
    "B0HOME002": {
        "kind": "feature",
        "index": 2,
        "claim": "Adjustable Height",
        "judge": (
            "No. These chairs are fixed height and cannot be adjusted. "
            "Corrected: Fixed-height sturdy wooden seating"
        ),
        "correction": "Fixed-height sturdy seating for children",
        "concepts": [
            ("White Wood Chairs", 0.91),
            ("Kids Wood Assembled Set of 2 Chairs", 0.83),
        ],
    },
    "B0CLOTH002": {
        "kind": "feature",
        "index": 0,
        "claim": "Made of genuine crocodile skin",
        "judge": (
            "No. The belt is full-grain cowhide leather, not crocodile skin. "
            "Corrected: Full-grain leather construction"
        ),
        "correction": "Full-grain cowhide leather construction",
        "concepts": [],  # conceptualization yields nothing parseable
    },
    "B0INDU002": {
        "kind": "intention",
        "claim": f"{INTENTION_PREFIX} wear them as winter gloves for warmth",
        "judge": (
            "No. Nitrile gloves are thin disposable gloves for hand protection, "
            "not warmth. Corrected: To protect hands during lab or shop work"
        ),
        "correction": "To keep hands protected from chemicals and mess during work",
        "concepts": [("winter mittens", 0.3)],
    },
    "B0SPOR003": {
        "kind": "feature",
        "index": 1,
        "claim": "Built-in digital calorie counter display",
        "judge": (
            "No. This is a plain speed rope; it has no electronic display. "
            "Corrected: Smooth ball-bearing handles"
        ),
        "correction": "Smooth-spinning ball-bearing aluminum handles",
        "concepts": [("speed jump rope", 0.7)],
    },
}

LOCALITY_ATTR = {
    "B0ELEC001": ("Connector", "a standard 3.5mm jack"),
    "B0ELEC002": ("Screen Size", "15.6 inches"),
    "B0HOME001": ("Diameter", "28 cm"),
    "B0HOME002": ("Color", "white"),
    "B0CLOTH002": ("Width", "1.5 inches"),
    "B0INDU002": ("Count", "100 gloves per box"),
    "B0SPOR003": ("Length", "an adjustable 3 meter cable"),
}

PORTABILITY_REPLACEMENT = {
    "JBL Reference 410 Headphone -Black": "JBL 410 over-ear headphones",
    "over-ear reference headphones": "studio monitoring headphones",
    '2020 Lenovo V330 15.6" FHD Business Laptop Computer': "Lenovo V330 business notebook",
    "Business Laptop": "work notebook computer",
    "Vev Vigano Eco Ceramic Nonstick Frying Pan": "Vev Vigano ceramic skillet",
    "Ceramic Frying Pan": "ceramic skillet",
    "Winsome Wood Assembled Set of 2 Kids Chairs, White": "Winsome white children's chair set",
    "White Wood Chairs": "white wooden chairs",
    "Kids Wood Assembled Set of 2 Chairs": "children's wooden chair pair",
    "Harbor Lane Classic Leather Belt, Brown": "Harbor Lane brown leather belt",
    "SafeGrip Nitrile Work Gloves, Box of 100": "SafeGrip disposable nitrile gloves",
    "ProForm Adjustable Jump Rope with Ball Bearings": "ProForm speed jump rope",
    "speed jump rope": "fast skipping rope",
}


def feature_lines(product_id: str) -> list[str]:
    script = WRONG.get(product_id)
    lines = list(DEFAULT_FEATURES)
    if script and script["kind"] == "feature":
        lines[script["index"]] = script["claim"]
    return lines


def intention_line(product_id: str, title: str) -> str:
    script = WRONG.get(product_id)
    if script and script["kind"] == "intention":
        return script["claim"]
    return default_intention(title)


def main() -> None:
    records = [ProductRecord.from_dict({**p, "category": p["category"].value}) for p in CATALOG]
    write_catalog(records, HERE / "catalog_25.jsonl")

    transcript = HERE / "transcripts.jsonl"
    if transcript.exists():
        transcript.unlink()
    clear_transcript_cache()

    def rec(model_id, prompt, response, **kw):
        record_completion(transcript, model_id, prompt, response, **kw)

    expected = {"yes_claims": [], "wrong_claims": [], "samples": []}

    for record in records:
        pid, title = record.product_id, record.title
        script = WRONG.get(pid)
        feats = feature_lines(pid)
        # Student generation; one product uses numbered list markers to
        # exercise the parser on the replay path.
        completion = "\n".join(feats)
        if pid == "B0ELEC003":
            completion = "\n".join(f"{i + 1}. {f}" for i, f in enumerate(feats))
        rec(STUDENT, prompts.render_prompt("student_feature", {"name": title}), completion)
        intent = intention_line(pid, title)
        rec(STUDENT, prompts.render_prompt("student_intention", {"name": title}), intent)

        # Judge rulings.
        for i, feat in enumerate(feats):
            claim_id = f"{pid}:{STUDENT}:feature:{i}"
            wrong_here = script and script["kind"] == "feature" and script["index"] == i
            rec(
                JUDGE,
                prompts.render_prompt("judge_feature", {"name": title, "feature": feat}),
                script["judge"] if wrong_here else "yes",
            )
            (expected["wrong_claims"] if wrong_here else expected["yes_claims"]).append(
                claim_id
            )
        claim_id = f"{pid}:{STUDENT}:intention:0"
        wrong_intent = script and script["kind"] == "intention"
        rec(
            JUDGE,
            prompts.render_prompt(
                "judge_intention",
                {
                    "name": title,
                    "detail_key": "intention of buying",
                    "detail_value": intent,
                },
            ),
            script["judge"] if wrong_intent else "yes",
        )
        (expected["wrong_claims"] if wrong_intent else expected["yes_claims"]).append(
            claim_id
        )

        if not script:
            continue

        # Conceptualization + plausibility + correction for the wrong claim.
        wrong_text = script["claim"]
        kind = script["kind"]
        rec(
            JUDGE,
            prompts.render_prompt(
                "conceptualize", {"product": title, "feature_or_intention": wrong_text}
            ),
            "\n".join(c for c, _ in script["concepts"]),
        )
        claim = Claim(
            claim_id="x", product_id=pid, kind=kind, text=wrong_text, source_model=STUDENT
        )
        for concept, score in script["concepts"]:
            rec(SCORER, association_statement(concept, claim), f"{score}", max_tokens=8)
        rec(
            CORRECTOR,
            prompts.render_prompt(
                f"correct_{kind}", {"name": title, "feature_or_intention": wrong_text}
            ),
            script["correction"],
            image_uri=record.image_uri,
        )

        # Locality sentence for the product.
        attr, value = LOCALITY_ATTR[pid]
        rec(
            JUDGE,
            prompts.render_prompt(
                "locality_distracting_neighbor",
                {"product": title, "description": record.description},
            ),
            f"The {attr} of {title} is {value}",
        )

        # Portability replacements per subject (title + kept concepts).
        threshold = 0.5
        if kind == "feature":
            idx = script["index"]
            base_claim_id = f"{pid}:{STUDENT}:feature:{idx}"
        else:
            base_claim_id = f"{pid}:{STUDENT}:intention:0"
        kept = [c for c, s in script["concepts"] if s >= threshold]
        subjects = [(base_claim_id, title)] + [
            (f"{base_claim_id}-c{i}", c) for i, c in enumerate(kept)
        ]
        for sample_id, subject in subjects:
            rec(
                JUDGE,
                prompts.render_prompt("portability_subject_replace", {"product": subject}),
                PORTABILITY_REPLACEMENT[subject],
                max_tokens=64,
            )
            expected["samples"].append(
                {
                    "sample_id": sample_id,
                    "subject": subject,
                    "kind": kind,
                    "category": record.category.value,
                    "target_new": script["correction"],
                    "ground_truth": wrong_text,
                }
            )

    # Standalone plausibility anchors for the scorer contract tests.
    rec(SCORER, "A frying pan is used for cooking", "0.97", max_tokens=8)
    rec(SCORER, "A frying pan is used for swimming", "0.03", max_tokens=8)

    (HERE / "expected.json").write_text(
        json.dumps(expected, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )

    TinyTransformer(ModelConfig(seed=7)).save(HERE / "toy_model.bin")

    (HERE / "run_config.yaml").write_text(
        """\
seed: 0
paths:
  catalog: catalog_25.jsonl
  transcripts: transcripts.jsonl
  benchmark: out/benchmark.jsonl
  stats: out/stats.txt
  outcomes: out/outcomes.jsonl
  checkpoints: out/checkpoints
  report: out/report.txt
backends:
  students:
    - {model_id: student-a}
  judge: {model_id: judge-x}
  scorer: {model_id: scorer-v}
  corrector: {model_id: corrector-c}
pipeline:
  threshold: 0.5
edit:
  layer: 2
  optimizer: {steps: 40, step_size: 1.0, clamp_factor: 8.0}
metrics:
  locality_horizon: 20
""",
        encoding="utf-8",
    )
    print(f"wrote fixtures to {HERE}")


if __name__ == "__main__":
    main()
