"""Compiler from bus-level security policies to SystemVerilog enforcement logic."""

__version__ = "0.1.0"
