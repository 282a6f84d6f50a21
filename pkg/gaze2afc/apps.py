from importlib import import_module

from django.apps import AppConfig


class Gaze2afcConfig(AppConfig):
    name = "gaze2afc"
    verbose_name = "Gaze 2AFC analysis"

    def ready(self) -> None:
        from django.apps import apps

        from . import factories

        for config in apps.get_app_configs():
            try:
                module = import_module(f"{config.name}.factories")
            except (ImportError, ModuleNotFoundError):
                continue
            for item in module.__dict__.values():
                if (
                    isinstance(item, type)
                    and issubclass(item, factories.Factory)
                    and item.model is not None
                ):
                    factories.Factory._registry[
                        f"{config.name.split(".")[-1]}.{item.__name__}"
                    ] = item
