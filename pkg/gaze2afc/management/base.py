"""
base.py

Shared plumbing of the gaze2afc management commands: the `--config`
option, verbosity-driven log levels and the translation of pipeline
errors into `CommandError` (non-zero exit, stage-tagged message).
"""

import logging

from django.core.management.base import BaseCommand, CommandError

from gaze2afc.conf import PipelineConfig, load_config
from gaze2afc.exceptions import Gaze2afcError, StageError
from gaze2afc.serializers import csv_header

LOG_LEVELS = {0: logging.WARNING, 1: logging.INFO}


class PipelineCommand(BaseCommand):
    """A management command running one pipeline stage.

    Subclasses set `stage`, add their own options in `add_stage_arguments`
    and implement `handle`.
    """

    stage = ""

    def add_arguments(self, parser):
        parser.add_argument("--config", help="TOML file with configuration sections")
        self.add_stage_arguments(parser)

    def add_stage_arguments(self, parser):
        pass

    def execute(self, *args, **options):
        level = LOG_LEVELS.get(options.get("verbosity", 1), logging.DEBUG)
        logging.getLogger("gaze2afc").setLevel(level)
        try:
            return super().execute(*args, **options)
        except StageError as e:
            raise CommandError(_with_notes(str(e), e)) from e
        except (Gaze2afcError, OSError, LookupError, ValueError) as e:
            message = f"[{self.stage}] {type(e).__name__}: {e}"
            raise CommandError(_with_notes(message, e)) from e

    def load_config(self, options, **sections) -> PipelineConfig:
        """Resolve the configuration with `section={key: value}` flag overrides."""

        return load_config(options.get("config"), **sections)

    def header(self, config: PipelineConfig) -> str:
        return csv_header(config.hash)

    def wrote(self, *paths):
        for path in paths:
            self.stdout.write(f"Wrote {path}")


def _with_notes(message: str, error: BaseException) -> str:
    notes = getattr(error, "__notes__", ())
    return "\n".join([message, *notes])
