"""
Append semantic action flows to every episode of a dataset.

Usage:
    python manage.py extract_flow --data data/ --alpha 0.5 --radius 3
    python manage.py extract_flow --data data/ --no-trace --force

The flags are shorthands for ``--set flow.<key>=<value>``; training and
evaluation commands must resolve the same flow section.
"""

from core.commands import VisaFlowCommand
from core.workflow import extract_dataset


class Command(VisaFlowCommand):
    help = "Extract tracks and flow representations for a stored dataset"

    def add_arguments(self, parser):
        self.add_data_argument(parser)
        parser.add_argument("--alpha", type=float)
        parser.add_argument("--radius", type=float)
        parser.add_argument("--tracker", type=str, help="oracle, block_match or external:<name>")
        parser.add_argument("--encoder-seed", dest="encoder_seed", type=int)
        parser.add_argument("--no-trace", dest="no_trace", action="store_true")
        parser.add_argument("--no-hand", dest="no_hand", action="store_true")
        parser.add_argument(
            "--force", action="store_true", help="Replace flows extracted with other settings"
        )
        self.add_config_arguments(parser)

    @staticmethod
    def flow_overrides(options) -> list[str]:
        overrides = []
        for key in ("alpha", "radius", "encoder_seed"):
            if options.get(key) is not None:
                overrides.append(f"flow.{key}={options[key]}")
        if options.get("tracker"):
            overrides.append(f"flow.tracker={options['tracker']}")
        if options.get("no_trace"):
            overrides.append("flow.static_mask=true")
        if options.get("no_hand"):
            overrides.append("flow.drop_manipulator=true")
        return overrides

    def run(self, **options):
        run_config = self.run_config(options, self.flow_overrides(options))
        flow_config = run_config.flow_config()
        fingerprint = flow_config.fingerprint()
        self.stdout.write(f"🚀 Extracting flows {fingerprint} under {options['data']}...")
        summary = extract_dataset(
            options["data"], flow_config, force=options["force"], jobs=options["jobs"]
        )
        self.success(
            f"{summary.processed} episodes processed, {summary.skipped} already up to date"
        )
