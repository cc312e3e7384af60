"""Exception hierarchy. The CLI maps InputError to exit 1 and ConfigError to exit 2."""


class TabweaveError(Exception):
    pass


class InputError(TabweaveError):
    """Bad or unreadable input document."""


class EmptyDocumentError(InputError):
    pass


class SchemaError(InputError):
    """A grid-JSON, taxonomy or model file does not match its format."""


class ConfigError(TabweaveError):
    pass


class ExportError(TabweaveError):
    pass
