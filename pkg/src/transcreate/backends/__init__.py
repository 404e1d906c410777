from .base import Backends, RetryPolicy, Role
from .config import load_backend_config, build_backends
from . import mocks

__all__ = ["Backends", "RetryPolicy", "Role", "load_backend_config", "build_backends", "mocks"]
