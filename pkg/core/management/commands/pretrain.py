"""
Stage 1: learn flow dynamics from action-free source-domain episodes.

Usage:
    python manage.py pretrain --data data/ --config experiment.json --out runs/
"""

from core.commands import VisaFlowCommand
from core.workflow import load_flow_dataset, pretrain


class Command(VisaFlowCommand):
    help = "Pretrain the policy transformer on source-domain flows"

    def add_arguments(self, parser):
        self.add_data_argument(parser)
        self.add_out_argument(parser)
        parser.add_argument("--max-steps", dest="max_steps", type=int, help="Stop after N steps")
        self.add_config_arguments(parser)

    def run(self, **options):
        run_config = self.run_config(options)
        data = options["data"].resolve()
        episodes = load_flow_dataset(data, "source", run_config)
        run_dir = run_config.run_dir(options["out"], "pretrain", inputs=(data,))
        run_config.echo(run_dir, {"data": str(data), "stage": "pretrain"})
        self.stdout.write(f"🚀 Pretraining on {len(episodes)} source episodes in {run_dir}...")
        result = pretrain(run_config, episodes, run_dir, max_steps=options["max_steps"])
        self.success(f"{result.steps} steps, best checkpoint {result.best_checkpoint}")
