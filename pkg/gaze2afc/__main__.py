"""
__main__.py

The `gaze2afc` console script: Django's command line with the
gaze2afc settings, accepting `run-all` for the `run_all` command.
"""

import os
import sys

ALIASES = {"run-all": "run_all"}


def main(argv: list[str] | None = None) -> None:
    """Run a gaze2afc subcommand."""

    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "gaze2afc.settings")
    from django.core.management import execute_from_command_line

    args = list(sys.argv[1:] if argv is None else argv)
    if args:
        args[0] = ALIASES.get(args[0], args[0])
    execute_from_command_line(["gaze2afc", *args])


if __name__ == "__main__":
    main()
