from .app import ServiceContext, create_app, LiveSimDriver

__all__ = ["ServiceContext", "create_app", "LiveSimDriver"]
