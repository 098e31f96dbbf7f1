import logging

from domain.ast import Program
from service.lexer import tokenize
from service.parser import parse_program
from service.resolver import check_entry, resolve_symbols


logger = logging.getLogger(__name__)


def load_program(source: str, file: str = "<input>", require_entry: bool = True) -> Program:
    """Tokenize, parse and resolve one translation unit."""
    tokens = tokenize(source, file)
    program = parse_program(tokens, file, source)
    resolve_symbols(program)
    if require_entry:
        check_entry(program)
    logger.info(
        f"loaded {file}: {len(program.globals)} globals, {len(program.functions)} functions, "
        f"{len(program.isrs)} ISRs"
    )
    return program
