import logging
import re
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from pydantic import ValidationError

from domain.ast import Expr, ExprKind, Program, VarDecl
from domain.c_types import CType
from domain.cfg import CfgNode, NodeKind
from domain.exceptions import SpecError
from domain.interrupts import Flag, InterruptState
from domain.interval import Interval
from domain.register import PLAIN, RegisterKind, RegisterSemantics
from dto.hardware_spec import BitRef, HardwareSpec, InputRegisterSpec, SourceSpec


logger = logging.getLogger(__name__)

GLOBAL_FLAG = ""

SECTION_KEYS = {
    "global": {"atomic_bits", "global_enable", "global_enable_initial"},
    "source": {"enable", "vector", "initial"},
    "input": {"address", "range", "values"},
    "atomic_fn": set(),
}

_SECTION_RE = re.compile(r"^\[\s*(\w+)(?:\s+([A-Za-z_][A-Za-z0-9_]*))?\s*\]$")
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


def _number(text: str, where: str) -> int:
    try:
        return int(text.strip(), 0)
    except ValueError:
        raise SpecError(f"{where}: '{text.strip()}' is not a number")


def _bit_ref(text: str, where: str) -> BitRef:
    parts = text.split(":")
    if len(parts) != 2:
        raise SpecError(f"{where}: expected ADDRESS:BIT, got '{text.strip()}'")
    try:
        return BitRef(address=_number(parts[0], where), bit=_number(parts[1], where))
    except ValidationError as e:
        raise SpecError(f"{where}: {e.errors()[0]['msg']}")


def _switch(text: str, where: str) -> bool:
    value = text.strip().lower()
    if value in ("on", "true", "1", "yes"):
        return True
    if value in ("off", "false", "0", "no"):
        return False
    raise SpecError(f"{where}: expected on|off, got '{text.strip()}'")


def _range(text: str, where: str) -> Tuple[int, int]:
    parts = text.split("..")
    if len(parts) != 2:
        raise SpecError(f"{where}: expected LO..HI, got '{text.strip()}'")
    return _number(parts[0], where), _number(parts[1], where)


def parse_hw_spec(text: str, file: str = "<hw>") -> HardwareSpec:
    """
    Parse the line-based hardware description:

        [global]              atomic_bits, global_enable = ADDR:BIT, global_enable_initial = on|off
        [source NAME]         enable = ADDR:BIT, vector = NAME_vect, initial = on|off
        [input NAME]          address = ADDR, range = LO..HI, values = V,V,...
        [atomic_fn NAME]

    `#` and `;` start comments.
    """
    sections: List[Tuple[str, Optional[str], Dict[str, Tuple[str, str]]]] = []
    seen_sections = set()
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"[#;]", raw, maxsplit=1)[0].strip()
        if not line:
            continue
        where = f"{file}:{number}"
        header = _SECTION_RE.match(line)
        if header:
            kind, name = header.group(1), header.group(2)
            if kind not in SECTION_KEYS:
                raise SpecError(f"{where}: unknown section [{kind}]")
            if (kind == "global") != (name is None):
                raise SpecError(f"{where}: section [{kind}] {'takes no' if kind == 'global' else 'needs a'} name")
            if (kind, name) in seen_sections:
                raise SpecError(f"{where}: duplicate section [{kind}{' ' + name if name else ''}]")
            seen_sections.add((kind, name))
            current = (kind, name, {})
            sections.append(current)
            continue
        entry = _KEY_RE.match(line)
        if entry is None:
            raise SpecError(f"{where}: expected 'key = value'")
        if current is None:
            raise SpecError(f"{where}: key outside of any section")
        key, value = entry.group(1), entry.group(2)
        kind, name, keys = current
        if key not in SECTION_KEYS[kind]:
            raise SpecError(f"{where}: unknown key '{key}' in [{kind}]")
        if key in keys:
            raise SpecError(f"{where}: duplicate key '{key}'")
        keys[key] = (value, where)

    fields = {"sources": [], "inputs": [], "atomic_functions": []}
    for kind, name, keys in sections:
        if kind == "global":
            if "atomic_bits" in keys:
                fields["atomic_bits"] = _number(*keys["atomic_bits"])
            if "global_enable" in keys:
                fields["global_enable"] = _bit_ref(*keys["global_enable"])
            if "global_enable_initial" in keys:
                fields["global_enable_initial"] = _switch(*keys["global_enable_initial"])
        elif kind == "source":
            for required in ("enable", "vector"):
                if required not in keys:
                    raise SpecError(f"{file}: [source {name}] is missing '{required}'")
            fields["sources"].append(SourceSpec(
                name=name,
                enable=_bit_ref(*keys["enable"]),
                vector=keys["vector"][0].strip(),
                initial=_switch(*keys["initial"]) if "initial" in keys else False,
            ))
        elif kind == "input":
            if "address" not in keys:
                raise SpecError(f"{file}: [input {name}] is missing 'address'")
            lo, hi = _range(*keys["range"]) if "range" in keys else (0, 255)
            values = []
            if "values" in keys:
                text_values, where = keys["values"]
                values = [_number(v, where) for v in text_values.split(",") if v.strip()]
            try:
                fields["inputs"].append(InputRegisterSpec(
                    name=name, address=_number(*keys["address"]), lo=lo, hi=hi, values=values,
                ))
            except ValidationError as e:
                raise SpecError(f"{file}: {e.errors()[0]['msg']}")
        else:
            fields["atomic_functions"].append(name)

    try:
        spec = HardwareSpec(**fields)
    except ValidationError as e:
        raise SpecError(f"{file}: {e.errors()[0]['msg']}")
    logger.info(
        f"hardware description {file}: atomic_bits={spec.atomic_bits}, {len(spec.sources)} sources, "
        f"{len(spec.inputs)} inputs, {len(spec.atomic_functions)} atomic functions"
    )
    return spec


def agnostic_spec(isr_names: Iterable[str] = ()) -> HardwareSpec:
    """Baseline without register semantics: nothing is atomic, ISRs come from the caller."""
    return HardwareSpec(atomic_bits=0, agnostic=True, isr_names=list(isr_names))


def classify_access(target: Union[VarDecl, int], spec: HardwareSpec, bit: Optional[int] = None) -> RegisterSemantics:
    if isinstance(target, VarDecl):
        if not target.is_register:
            return PLAIN
        address, bit = target.absolute_address, target.bit
    else:
        address = target
    if spec.agnostic:
        return PLAIN

    enable_bits = []
    if spec.global_enable is not None:
        enable_bits.append((spec.global_enable, GLOBAL_FLAG))
    enable_bits.extend((source.enable, source.name) for source in spec.sources)

    if bit is not None:
        for ref, flag in enable_bits:
            if (ref.address, ref.bit) == (address, bit):
                if flag == GLOBAL_FLAG:
                    return RegisterSemantics(RegisterKind.GLOBAL_ENABLE)
                return RegisterSemantics(RegisterKind.SOURCE_ENABLE, source=flag)
    else:
        mapped = tuple(sorted((ref.bit, flag) for ref, flag in enable_bits if ref.address == address))
        if mapped:
            return RegisterSemantics(RegisterKind.ENABLE_REGISTER, bits=mapped)

    for register in spec.inputs:
        if register.address == address:
            value_range = (0, 1) if bit is not None else (register.lo, register.hi)
            return RegisterSemantics(RegisterKind.INPUT, source=register.name, value_range=value_range)
    return PLAIN


def is_atomic_access(ctype: CType, spec: HardwareSpec) -> bool:
    return ctype.bits <= spec.atomic_bits


def initial_interrupt_state(spec: HardwareSpec, sources: Iterable[str]) -> InterruptState:
    if spec.agnostic:
        return InterruptState.make(Flag.UNKNOWN, {name: Flag.UNKNOWN for name in sources})
    flags = {source.name: Flag.of(source.initial) for source in spec.sources}
    return InterruptState.make(Flag.of(spec.global_enable_initial), flags)


def isr_sources(program: Program, spec: HardwareSpec) -> Dict[str, str]:
    """Map each analyzed ISR (function name) to the interrupt source that triggers it."""
    if spec.agnostic:
        mapping = {}
        for name in spec.isr_names:
            if program.function(name) is None:
                raise SpecError(f"--isr {name}: no such function or ISR in {program.file}")
            mapping[name] = name
        return mapping
    mapping = {}
    for isr in program.isrs:
        source = spec.source_for_vector(isr.isr_vector)
        if source is None:
            raise SpecError(f"ISR({isr.isr_vector}) has no interrupt source in the hardware description")
        mapping[isr.name] = source.name
    return mapping


def _register_decl(expr: Expr) -> Optional[VarDecl]:
    while expr.kind == ExprKind.VCAST:
        expr = expr.children[0]
    if expr.kind == ExprKind.VAR and expr.decl is not None and expr.decl.is_register:
        return expr.decl
    return None


def _set(ints: InterruptState, flag_name: str, flag: Flag) -> InterruptState:
    if flag_name == GLOBAL_FLAG:
        return ints.with_global(flag)
    return ints.with_source(flag_name, flag)


def _mask_update(value: Expr, decl: VarDecl) -> Optional[Tuple[str, int]]:
    """Recognize `reg | MASK` and `reg & MASK` (either operand order)."""
    if value.kind != ExprKind.BINARY or value.op not in ("|", "&"):
        return None
    left, right = value.children
    for reg_side, mask_side in ((left, right), (right, left)):
        if _register_decl(reg_side) is decl and mask_side.kind == ExprKind.CONST:
            return value.op, mask_side.value
    return None


def interrupt_transfer(
    node: CfgNode,
    ints: InterruptState,
    spec: HardwareSpec,
    evaluate: Optional[Callable[[Expr], Interval]] = None,
) -> InterruptState:
    """
    Effect of one node on the enable flags. Constant writes decide a flag,
    anything else makes it unknown. `evaluate` gives the interval of the
    value written (defaults to treating non-constants as unknown).
    """
    if spec.agnostic:
        return ints
    if node.kind == NodeKind.CALL and node.callee in ("sei", "cli"):
        return ints.with_global(Flag.of(node.callee == "sei"))
    if node.kind != NodeKind.ASSIGN:
        return ints

    decl = _register_decl(node.target)
    if decl is None:
        return ints
    semantics = classify_access(decl, spec)
    if not semantics.is_enable:
        return ints

    if semantics.kind in (RegisterKind.GLOBAL_ENABLE, RegisterKind.SOURCE_ENABLE):
        flag_name = GLOBAL_FLAG if semantics.kind == RegisterKind.GLOBAL_ENABLE else semantics.source
        interval = _value_of(node.value, evaluate)
        if interval.is_const:
            flag = Flag.of(interval.value & 1)
        elif interval.within(1, 1):
            flag = Flag.ENABLED
        elif interval.within(0, 0):
            flag = Flag.DISABLED
        else:
            flag = Flag.UNKNOWN
        return _set(ints, flag_name, flag)

    update = _mask_update(node.value, decl)
    interval = _value_of(node.value, evaluate)
    for bit, flag_name in semantics.bits:
        if update is not None:
            op, mask = update
            if op == "|" and mask >> bit & 1:
                ints = _set(ints, flag_name, Flag.ENABLED)
            elif op == "&" and not mask >> bit & 1:
                ints = _set(ints, flag_name, Flag.DISABLED)
        elif interval.is_const:
            ints = _set(ints, flag_name, Flag.of(interval.value >> bit & 1))
        else:
            ints = _set(ints, flag_name, Flag.UNKNOWN)
    return ints


def _value_of(expr: Expr, evaluate: Optional[Callable[[Expr], Interval]]) -> Interval:
    if expr.kind == ExprKind.CONST:
        return Interval.const(expr.value)
    if evaluate is not None:
        return evaluate(expr)
    return Interval.top()


def may_enable(node: CfgNode, spec: HardwareSpec) -> bool:
    """True if the node can set some enable flag to enabled (or unknown)."""
    if spec.agnostic:
        return False
    if node.kind == NodeKind.CALL and node.callee == "sei":
        return True
    if node.kind != NodeKind.ASSIGN:
        return False
    decl = _register_decl(node.target)
    if decl is None or not classify_access(decl, spec).is_enable:
        return False
    after = interrupt_transfer(
        node,
        InterruptState.make(Flag.DISABLED, {source.name: Flag.DISABLED for source in spec.sources}),
        spec,
    )
    return after.global_flag != Flag.DISABLED or any(flag != Flag.DISABLED for _, flag in after.sources)
