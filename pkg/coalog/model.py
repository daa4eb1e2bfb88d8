from dataclasses import dataclass, field
from typing import List, Optional

from coalog.config import DEFAULT_LIMIT


class Model:

    @classmethod
    def from_json(cls, json):
        if json is None:
            return json
        fields = {}
        for key, value in json.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f'Unknown {cls.__name__} field {key!r}')
            field_type = cls.__dataclass_fields__[key].type
            if isinstance(field_type, type) and issubclass(field_type, Model):
                value = field_type.from_json(value)
            fields[key] = value
        return cls(**fields)

    def to_json(self):
        json = {}
        for key in self.__dataclass_fields__.keys():
            value = getattr(self, key)
            if isinstance(value, Model):
                value = value.to_json()
            elif isinstance(value, list):
                value = [item.to_json() if isinstance(item, Model) else item for item in value]
            json[key] = value
        return json


@dataclass
class CoalogConfig(Model):
    limit: int = DEFAULT_LIMIT
    seed: int = 0
    trials: int = 20
    workers: int = 4


@dataclass
class TrialResult(Model):
    functor: str
    trial: int
    ok: bool
    detail: str = ''
    size: Optional[int] = None


@dataclass
class SuiteReport(Model):
    suite: str
    results: List[TrialResult] = field(default_factory=list)

    @property
    def passed(self) -> int:
        return sum(1 for result in self.results if result.ok)

    @property
    def failed(self) -> int:
        return len(self.results) - self.passed

    @property
    def ok(self) -> bool:
        return self.failed == 0

    @classmethod
    def from_json(cls, json):
        json = dict(json)
        json['results'] = [TrialResult.from_json(result) for result in json.get('results', [])]
        for derived in ('passed', 'failed', 'ok'):
            json.pop(derived, None)
        return super().from_json(json)

    def to_json(self):
        json = super().to_json()
        json.update(passed=self.passed, failed=self.failed, ok=self.ok)
        return json
