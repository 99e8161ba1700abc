"""HTTP service and CLI: the machine interface over the compliance engine."""

from ranguard.service.app import ENDPOINT_INVENTORY, create_app
from ranguard.service.config import ServiceConfig, load_config, parse_mode
from ranguard.service.state import ServiceState

__all__ = ["ENDPOINT_INVENTORY", "ServiceConfig", "ServiceState", "create_app", "load_config", "parse_mode"]
