"""OEK: one small kernel language run under a ladder of execution models.

The ladder runs from a stack-based sequential interpreter through an
inline-call interpreter to two scheduled models, one scheduling posted
functions and one scheduling active objects. The analysis tools on top
compare outcomes, enumerate interleavings, find data races and apply a
sequentially sound optimization.
"""

from oek.config import ModelConfig, parse_config, run_config
from oek.ir import ParseError, ValidatedProgram, ValidationError, load, parse, pretty_print, validate
from oek.outcome import Outcome, Status
from oek.sched import Runtime, run_funcsched, run_objsched
from oek.seq import StackMachine, run_inline, run_stack, step_stack
from oek.trace import Event, Trace

__version__ = "0.1.0"

__all__ = [
    "Event",
    "ModelConfig",
    "Outcome",
    "ParseError",
    "Runtime",
    "StackMachine",
    "Status",
    "Trace",
    "ValidatedProgram",
    "ValidationError",
    "load",
    "parse",
    "parse_config",
    "pretty_print",
    "run_config",
    "run_funcsched",
    "run_inline",
    "run_objsched",
    "run_stack",
    "step_stack",
    "validate",
]
