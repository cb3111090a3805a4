"""
Base class of the visaflow management commands.

Pipeline errors leave the command as ``CommandError`` carrying the exit
code of the exception: 2 for validation, 3 for numeric and 4 for version
problems.
"""

import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.config import RunConfig
from core.exceptions import VisaFlowError

logger = logging.getLogger(__name__)


class VisaFlowCommand(BaseCommand):
    def add_config_arguments(self, parser):
        parser.add_argument(
            "--config", type=str, help="Experiment JSON file layered over the defaults"
        )
        parser.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="Override one configuration value (repeatable)",
        )
        parser.add_argument(
            "--preset", type=str, help="Named preset from the run defaults, e.g. real_world"
        )
        parser.add_argument(
            "--jobs",
            type=int,
            default=settings.VISAFLOW_JOBS,
            help="Episodes or evaluation sequences processed in parallel",
        )

    def add_data_argument(self, parser):
        parser.add_argument(
            "--data",
            type=Path,
            default=settings.VISAFLOW_DATA_ROOT,
            help="Dataset root (defaults to VISAFLOW_DATA_ROOT)",
        )

    def add_out_argument(self, parser):
        parser.add_argument(
            "--out",
            type=Path,
            default=settings.VISAFLOW_RUNS_ROOT,
            help="Run root; outputs go to a hash-named directory below it",
        )

    def run_config(self, options, extra_overrides=()) -> RunConfig:
        overrides = [*options.get("overrides", []), *extra_overrides]
        return RunConfig.resolve(options.get("config"), overrides, options.get("preset"))

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except VisaFlowError as exc:
            logger.error("%s failed: %s", self.__module__.rsplit(".", 1)[-1], exc)
            raise CommandError(str(exc), returncode=exc.exit_code) from exc

    def run(self, **options):
        raise NotImplementedError

    def success(self, message: str) -> None:
        self.stdout.write(self.style.SUCCESS(f"✅ {message}"))
