import math
from typing import Any, Dict, List, Optional

from aoicut.exceptions import ConfigError


def parse(data: Any, attribute: Optional[str] = None, value_type: str = "str", default_is_none: bool = False):
    """ Parse a raw value into the type given.

        Parameters:
            data (Any): data to check
            attribute (Optional[str]): check data for this attribute.
            value_type (str): Type that the value is. One of str, int, float, bool or a List variant like floatList.
            default_is_none (bool): Makes default None.

        Returns:
            Any: Parsed Value

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When the value cannot be read as the type given.
    """
    if default_is_none is False and value_type in ["int", "float"]:
        default = 0
    elif default_is_none is False and value_type.endswith("List"):
        default = []
    else:
        default = None

    if attribute is None:
        value = data
    else:
        if attribute not in data:
            return default
        value = data[attribute]
    if value is None or (isinstance(value, str) and value.strip() == ""):
        return default
    try:
        if value_type == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        elif value_type == "float":
            number = float(value)
            if math.isnan(number):
                raise ValueError(value)
            return number
        elif value_type == "bool":
            if isinstance(value, bool):
                return value
            elif str(value).lower() in ["t", "true", "yes", "1"]:
                return True
            elif str(value).lower() in ["f", "false", "no", "0"]:
                return False
            raise ValueError(value)
        elif value_type.endswith("List"):
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return [parse(v.strip() if isinstance(v, str) else v, value_type=value_type[:-4]) for v in value]
        else:
            return str(value)
    except (TypeError, ValueError):
        title = f"{attribute} " if attribute else ""
        raise ConfigError(f"Invalid {title}value: '{value}' Expected: {value_type}")


def parse_pairs(text: str, title: str = "Parameters") -> Dict[str, str]:
    """ Split a ``key=value[,key=value]*`` string into a dictionary.

        Parameters:
            text (str): Text to split.
            title (str): Name of what is being parsed, used in error messages.

        Returns:
            Dict[str, str]: Raw values by key.

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: When a pair is malformed or a key repeats.
    """
    pairs = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key or not value.strip():
            raise ConfigError(f"Invalid {title}: '{text}' Expected: key=value[,key=value]*")
        if key in pairs:
            raise ConfigError(f"Invalid {title}: '{text}' Repeated key: {key}")
        pairs[key] = value.strip()
    return pairs


def validate_options(title: str, value: str, options: List[str]):
    """ Validate the value given from the options given.

        Parameters:
            title (str): Name of what is being validated.
            value (str): Value to check options for.
            options (List[str]): List of options to check the value against.

        Returns:
            str: Valid Value

        Raises:
            :class:`~aoicut.exceptions.ConfigError`: If the value isn't in the options.
    """
    if value in options:
        return value
    raise ConfigError(f"Invalid {title}: '{value}' Options: {options}")


def format_number(value: Any) -> Any:
    """ Shortest round-trip text for floats, ``inf`` for infinities; other values pass through. """
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return value
