from mocha.service.app import api_server, create_app

__all__ = ["api_server", "create_app"]
