"""Run every editing method over a small benchmark and print the report table.

Uses subject-terminal toy samples so the methods have a fair shot at REL=1.0,
then aggregates reliability (REL), locality (LOC), and portability (POR).
"""

from pathlib import Path

from prodedit.benchmark import EditSample, LocalityProbe, PortabilityProbe
from prodedit.catalog import Category
from prodedit.editing import EditConfig, OptimizerConfig
from prodedit.evaluation import METHODS, aggregate, render_report, run_experiment
from prodedit.model import TinyTransformer

FIXTURES = Path(__file__).parent.parent / "fixtures"


def make_samples():
    specs = [("qq", "z", "feature"), ("vw", "j", "feature"), ("kx", "m", "intention")]
    samples = []
    for i, (subject, target, kind) in enumerate(specs):
        prompt = f"One feature of {subject}"
        samples.append(
            EditSample(
                sample_id=f"demo{i}",
                kind=kind,
                category=Category.ELECTRONICS,
                subject=subject,
                edit_prompt=prompt,
                target_new=target,
                ground_truth="old",
                source_model="demo",
                locality=(LocalityProbe(prompt="The color of the unrelated lamp is"),),
                portability=(
                    PortabilityProbe(
                        prompt=f"One feature of x{subject}",
                        replaced_subject=f"x{subject}",
                        target=target,
                    ),
                ),
            )
        )
    return samples


def main():
    model = TinyTransformer.load(FIXTURES / "toy_model.bin")
    samples = make_samples()
    cfg = EditConfig(
        layer=2, layers=(1, 2), optimizer=OptimizerConfig(40, 1.0, 8.0),
        ft_steps=50, lora_steps=50,
    )

    outcomes = []
    for method in METHODS:
        print(f"Running {method} over {len(samples)} samples "
              "(edit -> evaluate -> revert each) ...")
        outcomes.extend(
            run_experiment(model, method, samples, cfg, model_id="toy_model")
        )

    print()
    print(render_report(aggregate(outcomes)))
    print("\nNotes: REL/POR are teacher-forced token accuracies on the new target;")
    print("LOC is top-1 agreement with the pre-edit model on an unrelated prompt.")


if __name__ == "__main__":
    main()
