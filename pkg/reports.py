"""
Report Models
=============
Pydantic models shared by the verification suites and the CLI. JSON output
is model_dump() of these; the human report is rendered from the same data.
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, computed_field


class CheckResult(BaseModel):
    name: str
    passed: bool
    witness: str = ""
    detail: Dict[str, Any] = Field(default_factory=dict)


class VerificationReport(BaseModel):
    suite: str
    checks: List[CheckResult] = Field(default_factory=list)
    seed: Optional[int] = None
    samples: Optional[int] = None
    timing: Optional[Dict[str, Any]] = None

    @computed_field
    @property
    def success(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, witness: str = "", **detail) -> CheckResult:
        check = CheckResult(name=name, passed=bool(passed), witness="" if passed else witness, detail=detail)
        self.checks.append(check)
        return check

    def failures(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]


def render_report(report: VerificationReport) -> str:
    """One line per check, PASS/FAIL first."""
    lines = [f"== {report.suite} =="]
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        line = f"[{status}] {check.name}"
        if check.witness:
            line += f"  -- witness: {check.witness}"
        lines.append(line)
        for key, value in check.detail.items():
            lines.append(f"    {key}: {value}")
    passed = sum(1 for c in report.checks if c.passed)
    lines.append(f"-- {passed}/{len(report.checks)} checks passed")
    if report.timing:
        for key, value in report.timing.items():
            lines.append(f"   timing.{key}: {value}")
    return "\n".join(lines)
