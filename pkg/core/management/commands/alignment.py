"""
Cross-domain alignment diagnostic of the flow representation.

Usage:
    python manage.py alignment --count 8 --seed 0 --out runs/
"""

import json

from core.commands import VisaFlowCommand
from evalharness.alignment import alignment_diagnostic


class Command(VisaFlowCommand):
    help = "Compare flows of matched source/target renderings against unmatched pairs"

    def add_arguments(self, parser):
        parser.add_argument("--count", type=int, default=8, help="Matched episode pairs")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--texture-shift", dest="texture_shift", type=int, default=3)
        self.add_out_argument(parser)
        self.add_config_arguments(parser)

    def run(self, **options):
        run_config = self.run_config(options)
        env = run_config.section("env")
        run_dir = run_config.run_dir(
            options["out"],
            "alignment",
            inputs=(options["count"], options["seed"], options["texture_shift"]),
        )
        run_config.echo(run_dir)
        report = alignment_diagnostic(
            run_config.flow_config(),
            count=options["count"],
            seed=options["seed"],
            subtasks=env["subtasks"],
            texture_shift=options["texture_shift"],
            jobs=options["jobs"],
            frame_size=env["frame_size"],
            step_cap=env["step_cap"],
            num_objects=env["num_objects"],
        )
        path = run_dir / "alignment.json"
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        self.stdout.write(
            f"  matched / unmatched: {report.ratio:.3f} (alpha 0: {report.raw_ratio:.3f})"
        )
        self.stdout.write(f"  texture nuisance ratio: {report.nuisance_ratio:.3f}")
        self.success(f"alignment written to {path}")
