"""
Chained-subtask evaluation of a finetuned checkpoint.

Usage:
    python manage.py evaluate --ckpt runs/finetune/<hash>/best.pt --n 100 --seed 0 --out runs/
"""

from pathlib import Path

from core.commands import VisaFlowCommand
from core.exceptions import ValidationFailure
from evalharness.ablation import evaluate_run
from evalharness.reporting import write_report


class Command(VisaFlowCommand):
    help = "Evaluate a checkpoint on seeded chains of subtasks"

    def add_arguments(self, parser):
        parser.add_argument("--ckpt", type=Path, required=True)
        parser.add_argument("--n", type=int, help="Evaluation sequences (eval.n_sequences)")
        parser.add_argument("--seed", type=int, help="Evaluation seed (defaults to eval.seed)")
        parser.add_argument("--variant", type=str, default="full", help="Row label in the report")
        self.add_out_argument(parser)
        self.add_config_arguments(parser)

    def run(self, **options):
        checkpoint = options["ckpt"]
        if not checkpoint.exists():
            raise ValidationFailure(f"checkpoint {checkpoint} does not exist")
        run_config = self.run_config(options)
        eval_section = run_config.section("eval")
        n_sequences = options["n"] or eval_section["n_sequences"]
        seed = eval_section["seed"] if options["seed"] is None else options["seed"]
        run_dir = run_config.run_dir(
            options["out"], "evaluate", inputs=(checkpoint.resolve(), n_sequences, seed)
        )
        run_config.echo(run_dir, {"checkpoint": str(checkpoint.resolve()), "seed": seed})
        self.stdout.write(f"🚀 Evaluating {checkpoint} on {n_sequences} sequences...")
        report = evaluate_run(
            run_config, checkpoint, n_sequences, seed, options["variant"], options["jobs"]
        )
        write_report([report], run_dir)
        rates = ", ".join(f"{rate:.3f}" for rate in report.sr)
        self.stdout.write(f"  SR: {rates}")
        self.success(f"avg_len {report.avg_len:.3f}, report in {run_dir}")
