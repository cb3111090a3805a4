"""
Stage 2: finetune into a language-conditioned policy on target demonstrations.

Usage:
    python manage.py finetune --data data/ --init runs/pretrain/<hash>/best.pt --out runs/
    python manage.py finetune --data data/ --allow-scratch --out runs/
"""

from pathlib import Path

from core.commands import VisaFlowCommand
from core.exceptions import ValidationFailure
from core.workflow import finetune, load_flow_dataset


class Command(VisaFlowCommand):
    help = "Finetune the policy on target-domain demonstrations"

    def add_arguments(self, parser):
        self.add_data_argument(parser)
        self.add_out_argument(parser)
        parser.add_argument("--init", type=Path, help="Pretrained checkpoint to start from")
        parser.add_argument(
            "--allow-scratch",
            dest="allow_scratch",
            action="store_true",
            help="Train from a fresh initialisation (the no-pretraining ablation)",
        )
        parser.add_argument("--max-steps", dest="max_steps", type=int, help="Stop after N steps")
        self.add_config_arguments(parser)

    def run(self, **options):
        init = options["init"]
        if init is None and not options["allow_scratch"]:
            raise ValidationFailure(
                "finetune needs --init <checkpoint>; pass --allow-scratch to train from scratch"
            )
        if init is not None and not init.exists():
            raise ValidationFailure(f"checkpoint {init} does not exist")
        run_config = self.run_config(options)
        data = options["data"].resolve()
        episodes = load_flow_dataset(data, "target", run_config)
        init = init.resolve() if init is not None else None
        run_dir = run_config.run_dir(options["out"], "finetune", inputs=(data, init or "scratch"))
        run_config.echo(
            run_dir, {"data": str(data), "stage": "finetune", "init": str(init) if init else None}
        )
        self.stdout.write(f"🚀 Finetuning on {len(episodes)} target episodes in {run_dir}...")
        result = finetune(run_config, episodes, run_dir, init=init, max_steps=options["max_steps"])
        self.success(f"{result.steps} steps, best checkpoint {result.best_checkpoint}")
