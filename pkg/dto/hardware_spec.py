from typing import List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class BitRef(BaseModel):
    """DTO for one bit of a memory-mapped register."""
    address: int = Field(..., ge=0, le=0xFFFF, description="Register address")
    bit: int = Field(..., ge=0, le=15, description="Bit index inside the register")

    def __str__(self) -> str:
        return f"0x{self.address:02X}:{self.bit}"


class SourceSpec(BaseModel):
    """DTO for an interrupt source and its enable bit."""
    name: str = Field(..., min_length=1, description="Interrupt source name")
    enable: BitRef = Field(..., description="Source enable bit")
    vector: str = Field(..., min_length=1, description="ISR vector name used in ISR(...)")
    initial: bool = Field(False, description="Enable bit value at reset")


class InputRegisterSpec(BaseModel):
    """DTO for an external input register (value set by the environment)."""
    name: str = Field(..., min_length=1, description="Register name")
    address: int = Field(..., ge=0, le=0xFFFF, description="Register address")
    lo: int = Field(0, description="Smallest value the register can hold")
    hi: int = Field(255, description="Largest value the register can hold")
    values: List[int] = Field(default_factory=list, description="Test values used by the concrete oracle")

    @model_validator(mode="after")
    def check_range(self) -> "InputRegisterSpec":
        if self.lo > self.hi:
            raise ValueError(f"input {self.name}: empty range {self.lo}..{self.hi}")
        for value in self.values:
            if not self.lo <= value <= self.hi:
                raise ValueError(f"input {self.name}: test value {value} outside {self.lo}..{self.hi}")
        return self

    def test_values(self) -> List[int]:
        return self.values or sorted({self.lo, self.hi})


class HardwareSpec(BaseModel):
    """DTO for a validated hardware description."""
    atomic_bits: int = Field(8, description="Widest access performed atomically")
    global_enable: Optional[BitRef] = Field(None, description="Global interrupt enable bit")
    global_enable_initial: bool = Field(False, description="Global enable bit value at reset")
    sources: List[SourceSpec] = Field(default_factory=list, description="Interrupt sources")
    inputs: List[InputRegisterSpec] = Field(default_factory=list, description="External input registers")
    atomic_functions: List[str] = Field(default_factory=list, description="Functions run uninterruptibly")
    agnostic: bool = Field(False, description="Hardware-agnostic baseline without register semantics")
    isr_names: List[str] = Field(default_factory=list, description="ISRs named explicitly (agnostic mode)")

    @field_validator("atomic_bits")
    @classmethod
    def check_atomic_bits(cls, value: int) -> int:
        if value not in (0, 8, 16, 32):
            raise ValueError(f"atomic_bits must be one of 8, 16, 32 (got {value})")
        return value

    @model_validator(mode="after")
    def check_consistency(self) -> "HardwareSpec":
        if self.agnostic:
            return self
        if self.atomic_bits == 0:
            raise ValueError("atomic_bits must be one of 8, 16, 32 (got 0)")
        if self.global_enable is None:
            raise ValueError("missing global_enable")
        bits = {(self.global_enable.address, self.global_enable.bit): "global_enable"}
        names, vectors = set(), set()
        for source in self.sources:
            key = (source.enable.address, source.enable.bit)
            if key in bits:
                raise ValueError(f"source {source.name}: enable bit {source.enable} already used by {bits[key]}")
            bits[key] = f"source {source.name}"
            if source.name in names:
                raise ValueError(f"duplicate source {source.name}")
            if source.vector in vectors:
                raise ValueError(f"vector {source.vector} mapped to two sources")
            names.add(source.name)
            vectors.add(source.vector)
        addresses = {}
        for register in self.inputs:
            if register.address in addresses:
                raise ValueError(f"input {register.name}: address 0x{register.address:02X} already used")
            if any(address == register.address for address, _ in bits):
                raise ValueError(f"input {register.name}: address 0x{register.address:02X} holds enable bits")
            addresses[register.address] = register.name
        return self

    def source_for_vector(self, vector: str) -> Optional[SourceSpec]:
        for source in self.sources:
            if source.vector == vector:
                return source
        return None

    @property
    def source_names(self) -> List[str]:
        return [source.name for source in self.sources]
