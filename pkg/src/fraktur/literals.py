"""Contains literals for Fraktur."""
import typing as _typing

boundary_tag_literal = _typing.Literal["dirichlet", "neumann", "free"]
side_literal = _typing.Literal["left", "right", "bottom", "top"]
initial_kind_literal = _typing.Literal["constant", "band"]
load_schedule_literal = _typing.Literal["zero", "constant", "ramp"]
target_kind_literal = _typing.Literal["trajectory", "final"]

BOUNDARY_TAGS = _typing.get_args(boundary_tag_literal)
SIDES = _typing.get_args(side_literal)
INITIAL_KINDS = _typing.get_args(initial_kind_literal)
LOAD_SCHEDULES = _typing.get_args(load_schedule_literal)
TARGET_KINDS = _typing.get_args(target_kind_literal)
