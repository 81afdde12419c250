from __future__ import annotations

import inspect
from abc import ABC
from dataclasses import fields
from itertools import chain
from typing import Any, ClassVar, Generic, Type, TypeVar

SerializedObject = dict[str, Any]

U = TypeVar("U", bound=Type[object])


class SerializableMixin:
    """Mixin for dataclasses of scalar values that are written to reports."""

    # Used to serialize properties in addition to dataclass attributes
    _serialized_properties: ClassVar[list[str]]
    _serialized_properties = list()

    def to_dict(self) -> SerializedObject:
        """Serialize the object to a dictionary.

        Inspired by dataclasses.asdict().

        Returns:
            The dataclass fields and serialized properties, in order.
        """
        official_fields = [field.name for field in fields(self)]  # type: ignore
        serialized_properties = getattr(self, "_serialized_properties", [])
        names = chain(official_fields, serialized_properties)
        return {name: getattr(self, name) for name in names}


class SubclassRegistryMixin(ABC, Generic[U]):
    """Mixin for looking up concrete subclasses by a class-level key."""

    registry_key: ClassVar[str]

    @classmethod
    def list_subclasses(cls) -> tuple[Type[U], ...]:
        """List all subclasses, including indirect ones."""
        subclasses = cls.__subclasses__()
        nested = [subcls.list_subclasses() for subcls in subclasses]
        return tuple(dict.fromkeys(chain(subclasses, *nested)))

    @classmethod
    def registry(cls) -> dict[str, Type[U]]:
        """Map registry keys to the concrete subclasses that declare them."""
        registry = dict()
        for subcls in cls.list_subclasses():
            if inspect.isabstract(subcls) or "registry_key" not in vars(subcls):
                continue
            registry[subcls.registry_key] = subcls
        return registry

    @classmethod
    def get_subclass(cls, key: str) -> Type[U]:
        """Retrieve a concrete subclass by its registry key.

        Raises:
            ValueError: If no subclass declares the key.
        """
        registry = cls.registry()
        if key not in registry:
            options = list(registry)
            message = f"Subclass for ({key}) not available ({options})."
            raise ValueError(message)
        return registry[key]
