"""Exception hierarchy shared by every module.

Each class carries a ``code`` used by the CLI to pick an exit status and a
``details`` dict that is serialized into the JSON error record.
"""


class TrigcertError(Exception):
    code = "error"
    exit_status = 1

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def to_dict(self):
        return {"error": self.code, "message": str(self), "details": _jsonable(self.details)}


class ParameterError(TrigcertError, ValueError):
    code = "parameter_error"
    exit_status = 2


class GaugeDomainError(TrigcertError, ValueError):
    code = "gauge_domain_error"
    exit_status = 2


class HypothesisError(TrigcertError):
    code = "hypothesis_error"
    exit_status = 2


class ResourceError(TrigcertError):
    code = "resource_error"
    exit_status = 3


class FrequencyRangeError(ResourceError):
    code = "frequency_range_error"


class PrecisionError(TrigcertError):
    code = "precision_error"
    exit_status = 3


class SearchFailure(TrigcertError):
    code = "search_failure"


class SamplingFailure(TrigcertError):
    code = "sampling_failure"


class CertificateMiss(TrigcertError):
    code = "certificate_miss"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (str, bool)) or obj is None:
        return obj
    if isinstance(obj, int):
        return obj
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)
