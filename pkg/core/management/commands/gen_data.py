"""
Generate an expert dataset.

Usage:
    python manage.py gen_data --domain source --count 200 --seed 0 --out data/
    python manage.py gen_data --domain target --count 20 --seed 0 --out data/
"""

from pathlib import Path

from django.conf import settings

from core.commands import VisaFlowCommand
from core.workflow import write_dataset
from envsim.world import DOMAINS


class Command(VisaFlowCommand):
    help = "Generate scripted-expert episodes for one domain"

    def add_arguments(self, parser):
        parser.add_argument("--domain", choices=DOMAINS, required=True)
        parser.add_argument(
            "--subtasks",
            type=str,
            help="Comma-separated subtasks (defaults to env.subtasks)",
        )
        parser.add_argument("--count", type=int, help="Successful episodes to write")
        parser.add_argument("--seed", type=int, help="Dataset seed (defaults to env.data_seed)")
        parser.add_argument("--out", type=Path, default=settings.VISAFLOW_DATA_ROOT)
        parser.add_argument("--force", action="store_true", help="Replace existing episodes")
        self.add_config_arguments(parser)

    def run(self, **options):
        env = self.run_config(options).section("env")
        domain = options["domain"]
        subtasks = options["subtasks"].split(",") if options["subtasks"] else env["subtasks"]
        count = options["count"] or env[f"{domain}_count"]
        seed = env["data_seed"] if options["seed"] is None else options["seed"]

        self.stdout.write(f"🚀 Generating {count} {domain} episodes into {options['out']}...")
        counts = write_dataset(
            options["out"],
            domain,
            [subtask.strip() for subtask in subtasks],
            count,
            seed,
            force=options["force"],
            jobs=options["jobs"],
            frame_size=env["frame_size"],
            step_cap=env["step_cap"],
            num_objects=env["num_objects"],
        )
        for subtask, written in sorted(counts.items()):
            self.stdout.write(f"  {subtask}: {written}")
        self.success(f"{sum(counts.values())} {domain} episodes written")
