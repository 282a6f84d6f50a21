"""
mixins.py

Test mixins for building synthetic records and sessions.
"""

import typing
import unittest

from gaze2afc.factories import Factory

if typing.TYPE_CHECKING:  # pragma: no cover
    from gaze2afc.synth import SynthConfig, SynthSession


class _FactoryDictionary(dict[type, Factory]):
    def __getitem__(self, key: str | type):
        if isinstance(key, str):
            key = Factory.get_factory(key).model
        return super().__getitem__(key)


class SynthTestMixin(unittest.TestCase):
    """A mixin for tests that need synthetic records or sessions.

    The factories named in `factories` are created once per test class,
    seeded with `factory_seed`, and looked up by record type or by
    registered name. `synth_session` generates (and caches per class)
    sessions of a small configuration.

    Example:
    ```python
    class TestPlans(SynthTestMixin, SimpleTestCase):

        factories = [TrialPlanFactory, "gaze2afc.ParticipantFactory"]

        def test_plan_alternates(self):
            plan = self.get_factory_for(TrialPlan).make(n_saccades=2)
    ```

    Attributes:
        - factories (list[type[Factory] | str]): The factories to create.
        - factory_seed (int): Seed of every created factory.
    """

    factories: list[type[Factory] | str] = []
    factory_seed: int = 0

    @classmethod
    def setUpClass(cls) -> None:
        super().setUpClass()
        factories = _FactoryDictionary()
        for factory in cls.factories:
            factory_class = Factory.get_factory(factory) if isinstance(factory, str) else factory
            factory_instance = factory_class(cls.factory_seed)
            factories[factory_instance.model] = factory_instance
        cls.factories = factories
        cls._sessions = {}

    def get_factory_for[T](self, model: typing.Type[T] | str) -> Factory[T]:
        """Get the given factory for use in the tests."""

        return self.factories[model]

    def synth_session(self, config: "SynthConfig | None" = None, **changes) -> "SynthSession":
        """A generated session, shared by the tests of the class.

        Args:
            config (SynthConfig | None): The base configuration; a 24-trial,
                2-block session by default.
            **changes: Field changes applied on top of `config`.
        """

        from gaze2afc.synth import SynthConfig, gen_session

        config = config or SynthConfig(n_trials=24, n_blocks=2)
        if changes:
            config = SynthConfig.from_dict(config.to_dict() | changes)
        key = repr(sorted(config.to_dict().items()))
        if key not in self._sessions:
            self._sessions[key] = gen_session(config)
        return self._sessions[key]
