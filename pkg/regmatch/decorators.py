"""Decorators that re-verify matcher output."""

import inspect
from functools import wraps
from typing import Any, Callable, Dict, Tuple

from regmatch.exceptions import VerificationError
from regmatch.graph import BipartiteRegularGraph, Matching, verify_matching


def _find_argument(
    func: Callable, name: str, args: Tuple[Any, ...], kwargs: Dict[str, Any]
) -> Any:
    """
    Get an argument by keyword, or by its position in the signature.

    Args:
        func: Wrapped function
        name: Parameter name
        args: Positional arguments of the call
        kwargs: Keyword arguments of the call

    Returns:
        The argument value

    Raises:
        ValueError: If the function has no such argument in this call
    """
    if name in kwargs:
        return kwargs[name]
    param_names = list(inspect.signature(func).parameters)
    if name in param_names:
        index = param_names.index(name)
        if index < len(args):
            return args[index]
    raise ValueError(
        f"Graph not found. Expected parameter '{name}' in function arguments."
    )


def verified(
    require_perfect: bool = True, graph_param: str = "graph"
) -> Callable:
    """
    Decorator re-checking the matching a matcher returns.

    The wrapped function may return a :class:`Matching` or a tuple whose
    first element is one. The matching is checked with
    :func:`regmatch.graph.verify_matching` against the graph argument.

    Args:
        require_perfect: Also require a perfect matching (default: True)
        graph_param: Name of the parameter holding the graph
            (default: 'graph')

    Returns:
        Decorated function

    Raises:
        VerificationError: If the returned matching fails verification
        ValueError: If the graph argument cannot be found

    Example:
        >>> from regmatch.baselines import hopcroft_karp
        >>>
        >>> @verified()
        ... def match(graph):
        ...     return hopcroft_karp(graph)
        >>>
        >>> match(BipartiteRegularGraph([[0, 1], [1, 0]])).size
        2
    """

    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            graph = _find_argument(func, graph_param, args, kwargs)
            if not isinstance(graph, BipartiteRegularGraph):
                raise ValueError(
                    f"Parameter '{graph_param}' is not a graph: {graph!r}"
                )

            result = func(*args, **kwargs)

            matching = result[0] if isinstance(result, tuple) else result
            if not isinstance(matching, Matching):
                raise VerificationError(
                    f"{func.__name__} returned {type(matching).__name__}, "
                    "not a matching"
                )
            report = verify_matching(graph, matching, require_perfect)
            if not report.ok:
                raise VerificationError(
                    f"{func.__name__} returned an invalid matching: "
                    f"{report.invariant}: {report.message}"
                )
            return result

        return wrapper

    return decorator
