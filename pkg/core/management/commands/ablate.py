"""
Train and evaluate the ablation matrix.

Usage:
    python manage.py ablate --data data/ --out runs/
    python manage.py ablate --data data/ --variants full,no_pretrain --seeds 0,1,2

The dataset needs raw source and target episodes; flows are computed for
every variant (stored flows are reused when they match).
"""

from core.commands import VisaFlowCommand
from evalharness.ablation import run_ablation_matrix
from evalharness.reporting import write_report
from services.episode_store import EpisodeStore


def int_list(text: str) -> list[int]:
    return [int(value) for value in text.split(",") if value.strip()]


class Command(VisaFlowCommand):
    help = "Run the ablation matrix (full, no_pretrain, alpha_zero, no_trace, no_hand)"

    def add_arguments(self, parser):
        self.add_data_argument(parser)
        self.add_out_argument(parser)
        parser.add_argument("--n", type=int, help="Evaluation sequences per seed")
        parser.add_argument("--seeds", type=int_list, help="Comma-separated seeds (eval.seeds)")
        parser.add_argument("--variants", type=str, help="Comma-separated subset of variants")
        parser.add_argument("--max-steps", dest="max_steps", type=int, help="Cap training steps")
        self.add_config_arguments(parser)

    def run(self, **options):
        run_config = self.run_config(options)
        data = options["data"].resolve()
        store = EpisodeStore(data)
        source, target = store.read_dataset("source"), store.read_dataset("target")
        variants = options["variants"].split(",") if options["variants"] else None
        run_dir = run_config.run_dir(
            options["out"], "ablate", inputs=(data, options["n"], options["seeds"], variants)
        )
        run_config.echo(run_dir, {"data": str(data), "variants": variants})
        self.stdout.write(f"🚀 Running the ablation matrix into {run_dir}...")
        result = run_ablation_matrix(
            run_config,
            source,
            target,
            options["out"],
            n_sequences=options["n"],
            seeds=options["seeds"],
            variants=variants,
            jobs=options["jobs"],
            max_steps=options["max_steps"],
        )
        write_report(result.pooled, run_dir)
        write_report(result.per_seed, run_dir, stem="per_seed")
        for report in result.pooled:
            self.stdout.write(f"  {report.variant:<12} avg_len {report.avg_len:.3f}")
        self.success(f"{len(result.pooled)} variants reported in {run_dir}")
