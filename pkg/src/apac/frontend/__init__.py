"""Parsing, spans and symbol tables for the supported C++ subset."""
from .errors import Diagnostic, FrontendError, ResolutionError, SourceSyntaxError, UnsupportedConstruct
from .parser import parse_translation_unit
from .source import SourceFile, SourceSpan
from .symbols import (
    ArgInfo,
    CallSiteInfo,
    DeclaratorKind,
    ExistingVar,
    FreshDecl,
    FunctionInfo,
    ParamInfo,
    Symbols,
    VarInfo,
    enumerate_call_sites,
    enumerate_functions,
)

__all__ = [
    "ArgInfo",
    "CallSiteInfo",
    "DeclaratorKind",
    "Diagnostic",
    "ExistingVar",
    "FreshDecl",
    "FrontendError",
    "FunctionInfo",
    "ParamInfo",
    "ResolutionError",
    "SourceFile",
    "SourceSpan",
    "SourceSyntaxError",
    "Symbols",
    "UnsupportedConstruct",
    "VarInfo",
    "enumerate_call_sites",
    "enumerate_functions",
    "parse_translation_unit",
]
