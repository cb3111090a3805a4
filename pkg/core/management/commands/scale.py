"""
Data-scaling sweep: finetune on nested subsets of the target demonstrations.

Usage:
    python manage.py scale --data data/ --counts 5,20,60
    python manage.py scale --data data/ --fractions 0.05,0.1,0.5
"""

from core.commands import VisaFlowCommand
from evalharness.ablation import run_data_scaling
from evalharness.reporting import write_report
from services.episode_store import EpisodeStore


def number_list(kind):
    def parse(text: str):
        return [kind(value) for value in text.split(",") if value.strip()]

    return parse


class Command(VisaFlowCommand):
    help = "Finetune on growing nested target subsets and evaluate each"

    def add_arguments(self, parser):
        self.add_data_argument(parser)
        self.add_out_argument(parser)
        sizes = parser.add_mutually_exclusive_group()
        sizes.add_argument("--counts", type=number_list(int), help="Demonstrations per subset")
        sizes.add_argument("--fractions", type=number_list(float), help="Fractions of the dataset")
        parser.add_argument("--seed", type=int, help="Training and evaluation seed (eval.seed)")
        parser.add_argument("--n", type=int, help="Evaluation sequences per subset")
        parser.add_argument("--max-steps", dest="max_steps", type=int, help="Cap training steps")
        self.add_config_arguments(parser)

    def run(self, **options):
        run_config = self.run_config(options)
        data = options["data"].resolve()
        store = EpisodeStore(data)
        source, target = store.read_dataset("source"), store.read_dataset("target")
        sizes = options["counts"] or options["fractions"]
        run_dir = run_config.run_dir(
            options["out"], "scale", inputs=(data, sizes, options["seed"], options["n"])
        )
        run_config.echo(run_dir, {"data": str(data), "sizes": sizes})
        self.stdout.write(f"🚀 Running the data-scaling sweep into {run_dir}...")
        reports = run_data_scaling(
            run_config,
            source,
            target,
            options["out"],
            counts=options["counts"],
            fractions=options["fractions"],
            seed=options["seed"],
            n_sequences=options["n"],
            jobs=options["jobs"],
            max_steps=options["max_steps"],
        )
        write_report(reports, run_dir)
        for report in reports:
            self.stdout.write(f"  {report.variant:<12} avg_len {report.avg_len:.3f}")
        self.success(f"{len(reports)} subsets reported in {run_dir}")
