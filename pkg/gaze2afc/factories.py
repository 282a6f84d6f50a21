"""
factories.py

Seeded factories for the records synthetic sessions are built from.

A factory pairs a record type (`model`) with a `definition` of random
field values. `make` fills in the definition, applies keyword overrides
(nested records take `field__subfield=value` overrides) and builds the
record. Factories are registered by the app under "gaze2afc.<ClassName>".
"""

# Imports
import dataclasses
import typing
from copy import deepcopy
from itertools import cycle

import faker
import numpy as np

T = typing.TypeVar("T")

# Upper bound on saccades per trial; plans carry one segment weight per possible segment.
MAX_SEGMENTS = 12


class Factory(typing.Generic[T]):
    """The base factory class for creating synthetic records.

    A Factory requires a model to be set and the `definition` method to be
    overriden. The `definition` method should return a dictionary of the
    fields that will be set on the record. Values may be other factories
    (instances, or registered names such as "gaze2afc.AvatarLayoutFactory"),
    which make the nested record.

    Attributes:
        - model (typing.Type[T]): The record type the factory makes.
        - seed (int): Seeds both the numpy generator and the faker instance.

    Methods:
        - get_factory: Get a registered factory class by name.
        - configure_faker: Configure the faker instance for this factory.
        - definition: Generate a definition for the record.
        - make: Make a record.
        - make_batch: Make a batch of records.
    """

    model: typing.Type[T] | None = None
    _registry: dict[str, typing.Type["Factory"]] = {}

    @classmethod
    def get_factory(cls, app_name: str, factory_name: str = None) -> typing.Type["Factory"]:
        """Get the factory for a given app and factory name.

        If the factory name is not provided, it is assumed that the
        app_name is in the format "app_name.factory_name".
        """

        if factory_name is None:
            app_name, factory_name = app_name.split(".")
        return cls._registry[f"{app_name}.{factory_name}"]

    def __init__(self, seed: int | np.random.SeedSequence | None = None, **options):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.options = options
        self.faker = self.configure_faker()

    def configure_faker(self) -> "faker.Faker":
        """Configure the faker instance for this factory.

        Returns:
            faker.Faker: A faker seeded from the factory's own generator.
        """

        instance = faker.Faker()
        instance.seed_instance(int(self.rng.integers(2**31)))
        return instance

    def definition(self) -> dict:
        """Generate a definition for the record.

        This method should be overriden to define the fields that will be
        set on the record.
        """

        raise NotImplementedError("The definition method must be overriden.")

    def make(self, **kwargs) -> T:
        """Make a record.

        Args:
            **kwargs: Field overrides; `field__subfield` reaches into nested records.

        Returns:
            T: The made record.
        """

        definition = self.__resolve_definition(**kwargs)
        try:
            return self.model(**definition)
        except TypeError as e:
            e.add_note(f"While making {self.model.__name__} with {sorted(kwargs)}")
            raise e

    def make_batch(self, size: int, sequence: list[dict] = None, **kwargs) -> list[T]:
        """Make a batch of records.

        Args:
            size (int): The size of the batch.
            sequence (list[dict]): Overrides cycled over the batch. Will be merged with kwargs.
            **kwargs: Overrides applied to every record.
        """

        size_range = range(size)
        _sequence = self.__resolve_sequence_with_kwargs(
            sequence or [dict() for _ in size_range], kwargs
        )

        return [self.make(**params) for params, _ in zip(cycle(_sequence), size_range)]

    def __resolve_sequence_with_kwargs(self, sequence, kwargs):
        """Update the sequence dictionaries to include the kwargs."""

        try:
            return [(params | kwargs) for params in sequence]
        except TypeError as e:
            e.add_note("The sequence must be a list or tuple of dictionaries.")
            raise e

    def __resolve_definition(self, **kwargs):
        definition = self.definition()
        kwargs = self.__handle_nested_kwargs(kwargs)
        unknown = set(kwargs) - set(definition)
        if unknown:
            raise TypeError(f"{type(self).__name__} has no field(s) {', '.join(sorted(unknown))}")
        for field, value in definition.items():
            definition[field] = self.__handle_nested_field(field, value, kwargs)
        return definition

    def __handle_nested_kwargs(self, kwargs: dict):
        _kwargs = deepcopy(kwargs)
        for keyword, value in ((k, v) for k, v in kwargs.items() if "__" in k):
            *fields, name = keyword.split("__")
            del _kwargs[keyword]
            nested = _list_to_nested_dict(fields, name, value)
            for field, overrides in nested.items():
                _kwargs[field] = _kwargs.get(field, {}) | overrides
        return _kwargs

    def __handle_nested_field(self, field, value, kwargs):
        """Make nested records for factory-valued fields."""

        if field in kwargs and dataclasses.is_dataclass(kwargs[field]):
            return kwargs[field]

        if isinstance(value, Factory):
            return value.make(**kwargs.get(field, {}))

        # Handles the case where the provided value
        # is a factory string like "gaze2afc.AvatarLayoutFactory"
        if isinstance(value, str) and value in self._registry:
            factory = self._registry[value](self.rng.integers(2**31), **self.options)
            return factory.make(**kwargs.get(field, {}))

        return kwargs.get(field, value)


def _list_to_nested_dict(lst, property, value):
    if not lst:
        return {property: value}
    return {lst[0]: _list_to_nested_dict(lst[1:], property, value)}


@dataclasses.dataclass(frozen=True)
class AvatarLayout:
    """Where the two avatars stand and how they sway during one trial."""

    separation_deg: float = 16.0
    sway_amplitude_deg: float = 1.5
    speed_deg_s: float = 3.0
    phase: float = 0.0
    pelvis_y_deg: float = 0.5

    def center_x(self, side: int, t) -> np.ndarray:
        """Horizontal body center of the avatar on `side` (-1 or +1) at trial time t."""

        t = np.asarray(t, dtype=float)
        omega = self.speed_deg_s / self.sway_amplitude_deg if self.sway_amplitude_deg else 0.0
        return side * self.separation_deg / 2 + self.sway_amplitude_deg * np.sin(
            omega * t + self.phase
        )


@dataclasses.dataclass(frozen=True)
class TrialPlan:
    """The gaze script of one trial.

    The first `n_saccades + 1` entries of `segment_weights` and `upper`
    are used; the rest let `n_saccades` be overridden without redrawing.
    """

    n_saccades: int
    first_side: int
    natural_side: int
    mse: float
    latency_frames: int
    segment_weights: tuple[float, ...]
    upper: tuple[bool, ...]
    look_dx: tuple[float, ...]
    layout: AvatarLayout

    def __post_init__(self):
        if not 0 <= self.n_saccades < len(self.segment_weights):
            raise ValueError(f"n_saccades {self.n_saccades} outside [0, {len(self.segment_weights) - 1}]")
        if self.first_side not in (-1, 1) or self.natural_side not in (-1, 1):
            raise ValueError("sides are -1 or +1")

    @property
    def sides(self) -> tuple[int, ...]:
        return tuple(self.first_side * (-1) ** s for s in range(self.n_saccades + 1))

    @property
    def last_side(self) -> int:
        return self.sides[-1]

    def segment_frames(self, n_frames: int, min_frames: int) -> list[int]:
        """Split the frames after the first saccade into one length per segment."""

        n_segments = self.n_saccades + 1
        available = n_frames - self.latency_frames
        spare = available - n_segments * min_frames
        if spare < 0:
            raise ValueError(
                f"{n_segments} segments of {min_frames} frames do not fit in {available} frames"
            )
        weights = np.asarray(self.segment_weights[:n_segments], dtype=float)
        extra = np.floor(weights / weights.sum() * spare).astype(int)
        extra[-1] += spare - extra.sum()
        return [int(min_frames + e) for e in extra]


@dataclasses.dataclass(frozen=True)
class Participant:
    participant_id: str
    block_offsets_px: tuple[tuple[float, float], ...]


class AvatarLayoutFactory(Factory[AvatarLayout]):
    model = AvatarLayout

    def definition(self) -> dict:
        return {
            "separation_deg": self.options.get("separation_deg", 16.0),
            "sway_amplitude_deg": self.options.get("sway_amplitude_deg", 1.5),
            "speed_deg_s": self.options.get("speed_deg_s", 3.0),
            "phase": float(self.rng.uniform(0, 2 * np.pi)),
            "pelvis_y_deg": self.options.get("pelvis_y_deg", 0.5),
        }


class TrialPlanFactory(Factory[TrialPlan]):
    """Options: `saccades` (min, max), `latency_frames` (min, max),
    `upper_probability`, `mse_log_sd`."""

    model = TrialPlan

    def definition(self) -> dict:
        low, high = self.options.get("saccades", (0, 3))
        latency = self.options.get("latency_frames", (4, 6))
        return {
            "n_saccades": int(self.rng.integers(low, high + 1)),
            "first_side": int(self.rng.choice((-1, 1))),
            "natural_side": int(self.rng.choice((-1, 1))),
            "mse": float(self.rng.lognormal(0.0, self.options.get("mse_log_sd", 0.5))),
            "latency_frames": int(self.rng.integers(latency[0], latency[1] + 1)),
            "segment_weights": tuple(self.rng.dirichlet(np.ones(MAX_SEGMENTS))),
            "upper": tuple(
                bool(u) for u in self.rng.uniform(size=MAX_SEGMENTS) < self.options.get("upper_probability", 0.6)
            ),
            "look_dx": tuple(self.rng.uniform(-1.0, 1.0, size=MAX_SEGMENTS)),
            "layout": AvatarLayoutFactory(int(self.rng.integers(2**31)), **self.options),
        }


class ParticipantFactory(Factory[Participant]):
    """Participant ids follow the NNxAA pattern: a number, m or w, and an age."""

    model = Participant

    def definition(self) -> dict:
        n_blocks = self.options.get("n_blocks", 4)
        max_offset = self.options.get("max_offset_px", 30.0)
        number = self.faker.random_int(1, 40)
        sex = self.faker.random_element(("m", "w"))
        age = self.faker.random_int(18, 40)
        return {
            "participant_id": f"{number:02d}{sex}{age}",
            "block_offsets_px": tuple(
                tuple(float(v) for v in self.rng.uniform(-max_offset, max_offset, size=2))
                for _ in range(n_blocks)
            ),
        }
