try:
    import tomllib as _impl
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _impl

loads = _impl.loads
TOMLDecodeError = _impl.TOMLDecodeError
