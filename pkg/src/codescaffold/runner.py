"""Sandboxed execution and I/O grading for untrusted programs.

Programs run as one subprocess each, launched from a configurable argv
template, inside a throwaway scratch directory with a stripped environment
and rlimits for CPU, address space, written-file size and process count.
Wall-clock time is capped at the CPU budget, stdout/stderr reads are capped
at the output limit (the process is killed once it floods past the cap).
This is process-level sandboxing only; it does not attempt VM isolation.
"""

from __future__ import annotations

import os
import resource
import shutil
import signal
import subprocess
import sys
import tempfile
import threading
import time
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum


class SetupError(Exception):
    """The sandbox itself could not start — an operational fault, not a
    property of the submitted program."""


class SandboxBusy(Exception):
    """All sandbox slots are taken and the wait queue is full."""

    def __init__(self, retry_after_s: float = 1.0):
        self.retry_after_s = retry_after_s
        super().__init__(f"sandbox pool saturated, retry after {retry_after_s}s")


class ExecutionStatus(str, Enum):
    COMPLETED = "Completed"
    RUNTIME_ERROR = "RuntimeError"
    TIMEOUT = "Timeout"
    MEMORY_EXCEEDED = "MemoryExceeded"
    OUTPUT_TRUNCATED = "OutputTruncated"
    SETUP_ERROR = "SetupError"


class VerdictLabel(str, Enum):
    PASS = "Pass"
    WRONG_OUTPUT = "WrongOutput"
    RUNTIME_ERROR = "RuntimeError"
    TIMEOUT = "Timeout"
    MEMORY_EXCEEDED = "MemoryExceeded"


@dataclass(frozen=True)
class ResourceLimits:
    cpu_ms: int = 2000
    memory_mib: int = 64
    output_limit_kib: int = 64
    network_enabled: bool = False  # the sandbox never grants network access

    def __post_init__(self):
        if not 100 <= self.cpu_ms <= 30000:
            raise ValueError(f"cpu_ms must lie in [100, 30000], got {self.cpu_ms}")
        if not 16 <= self.memory_mib <= 512:
            raise ValueError(f"memory_mib must lie in [16, 512], got {self.memory_mib}")
        if not 1 <= self.output_limit_kib <= 4096:
            raise ValueError(f"output_limit_kib must lie in [1, 4096], got {self.output_limit_kib}")
        if self.network_enabled:
            raise ValueError("network access cannot be enabled")

    def to_dict(self) -> dict:
        return {
            "cpu_ms": self.cpu_ms,
            "memory_mib": self.memory_mib,
            "output_limit_kib": self.output_limit_kib,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResourceLimits":
        return cls(
            cpu_ms=data.get("cpu_ms", 2000),
            memory_mib=data.get("memory_mib", 64),
            output_limit_kib=data.get("output_limit_kib", 64),
        )


@dataclass(frozen=True)
class OutputPolicy:
    trim_trailing_ws: bool = True
    normalize_line_endings: bool = True
    float_tolerance: float | None = None

    def __post_init__(self):
        if self.float_tolerance is not None and self.float_tolerance <= 0:
            raise ValueError("float_tolerance must be positive when present")

    def to_dict(self) -> dict:
        return {
            "trim_trailing_ws": self.trim_trailing_ws,
            "normalize_line_endings": self.normalize_line_endings,
            "float_tolerance": self.float_tolerance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OutputPolicy":
        return cls(
            trim_trailing_ws=data.get("trim_trailing_ws", True),
            normalize_line_endings=data.get("normalize_line_endings", True),
            float_tolerance=data.get("float_tolerance"),
        )


@dataclass(frozen=True)
class IOExample:
    input: str
    expected_output: str
    output_policy: OutputPolicy = OutputPolicy()

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "expected_output": self.expected_output,
            "output_policy": self.output_policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IOExample":
        return cls(
            input=data["input"],
            expected_output=data["expected_output"],
            output_policy=OutputPolicy.from_dict(data.get("output_policy", {})),
        )


@dataclass(frozen=True)
class ExecutionResult:
    status: ExecutionStatus
    stdout: str
    stderr: str
    duration_ms: int

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "stdout": self.stdout,
            "stderr": self.stderr,
            "duration_ms": self.duration_ms,
        }


@dataclass(frozen=True)
class Mismatch:
    """First point of divergence between actual and expected output."""

    line: int
    expected: str | None
    actual: str | None

    def to_dict(self) -> dict:
        return {"line": self.line, "expected": self.expected, "actual": self.actual}

    @classmethod
    def from_dict(cls, data: dict) -> "Mismatch":
        return cls(line=data["line"], expected=data["expected"], actual=data["actual"])


@dataclass(frozen=True)
class Verdict:
    label: VerdictLabel
    mismatch: Mismatch | None = None

    def __post_init__(self):
        if (self.mismatch is not None) != (self.label is VerdictLabel.WRONG_OUTPUT):
            raise ValueError("mismatch must be present exactly when label is WrongOutput")

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "mismatch": self.mismatch.to_dict() if self.mismatch else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Verdict":
        mismatch = data.get("mismatch")
        return cls(
            label=VerdictLabel(data["label"]),
            mismatch=Mismatch.from_dict(mismatch) if mismatch else None,
        )


@dataclass(frozen=True)
class GradeReport:
    verdicts: tuple[Verdict, ...]
    all_pass: bool

    def to_dict(self) -> dict:
        return {"verdicts": [v.to_dict() for v in self.verdicts], "all_pass": self.all_pass}

    @classmethod
    def from_dict(cls, data: dict) -> "GradeReport":
        return cls(
            verdicts=tuple(Verdict.from_dict(v) for v in data.get("verdicts", [])),
            all_pass=data["all_pass"],
        )


@dataclass(frozen=True)
class InterpreterConfig:
    """How to launch the teaching-language runtime. ``{source}`` in the argv
    template is replaced with the path of the submitted program."""

    argv_template: tuple[str, ...] = (sys.executable, "-I", "{source}")
    source_filename: str = "main.py"


DEFAULT_INTERPRETER = InterpreterConfig()
DEFAULT_LIMITS = ResourceLimits()

_SANDBOX_ENV_KEEP = ("PATH",)


def _child_env() -> dict:
    env = {key: os.environ[key] for key in _SANDBOX_ENV_KEEP if key in os.environ}
    env.setdefault("PATH", "/usr/local/bin:/usr/bin:/bin")
    env["PYTHONIOENCODING"] = "utf-8"
    return env


def execute(source: str, stdin_text: str, limits: ResourceLimits = DEFAULT_LIMITS,
            interpreter: InterpreterConfig = DEFAULT_INTERPRETER) -> ExecutionResult:
    """Run one program against one stdin in a fresh sandbox.

    Raises SetupError if the sandbox cannot start; every program-caused
    failure is reported through the result status instead.
    """
    scratch = tempfile.mkdtemp(prefix="codescaffold-run-")
    output_cap = limits.output_limit_kib * 1024
    proc = None
    try:
        source_path = os.path.join(scratch, interpreter.source_filename)
        with open(source_path, "w", encoding="utf-8") as fh:
            fh.write(source)
        argv = [arg.replace("{source}", source_path) for arg in interpreter.argv_template]

        mem_bytes = limits.memory_mib * 1024 * 1024
        cpu_seconds = max(1, -(-limits.cpu_ms // 1000))

        def apply_limits():
            resource.setrlimit(resource.RLIMIT_CPU, (cpu_seconds, cpu_seconds + 1))
            resource.setrlimit(resource.RLIMIT_AS, (mem_bytes, mem_bytes))
            resource.setrlimit(resource.RLIMIT_FSIZE, (output_cap, output_cap))
            resource.setrlimit(resource.RLIMIT_NPROC, (64, 64))
            resource.setrlimit(resource.RLIMIT_NOFILE, (64, 64))

        started = time.monotonic()
        try:
            proc = subprocess.Popen(
                argv,
                cwd=scratch,
                env=_child_env(),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                start_new_session=True,
                preexec_fn=apply_limits,
            )
        except (OSError, ValueError) as exc:
            raise SetupError(f"could not start sandbox process: {exc}") from exc

        truncated = {"stdout": False, "stderr": False}
        captured = {"stdout": b"", "stderr": b""}

        def drain(stream_name: str):
            stream = getattr(proc, stream_name)
            chunks = []
            size = 0
            while True:
                chunk = stream.read(4096)
                if not chunk:
                    break
                if size < output_cap:
                    chunks.append(chunk[: output_cap - size])
                size += len(chunk)
                if size > output_cap and not truncated[stream_name]:
                    truncated[stream_name] = True
                    _kill_group(proc)
            captured[stream_name] = b"".join(chunks)

        readers = [threading.Thread(target=drain, args=(name,), daemon=True)
                   for name in ("stdout", "stderr")]
        for t in readers:
            t.start()

        try:
            proc.stdin.write(stdin_text.encode("utf-8"))
            proc.stdin.close()
        except (BrokenPipeError, OSError):
            pass

        timed_out = False
        try:
            proc.wait(timeout=limits.cpu_ms / 1000)
        except subprocess.TimeoutExpired:
            timed_out = True
            _kill_group(proc)
            proc.wait()
        duration_ms = int((time.monotonic() - started) * 1000)
        for t in readers:
            t.join(timeout=5)

        stdout = captured["stdout"].decode("utf-8", errors="replace")
        stderr = captured["stderr"].decode("utf-8", errors="replace")
        returncode = proc.returncode

        if timed_out or returncode == -signal.SIGXCPU:
            status = ExecutionStatus.TIMEOUT
        elif truncated["stdout"]:
            status = ExecutionStatus.OUTPUT_TRUNCATED
        elif returncode != 0 and "MemoryError" in stderr:
            status = ExecutionStatus.MEMORY_EXCEEDED
        elif returncode != 0:
            status = ExecutionStatus.RUNTIME_ERROR
        else:
            status = ExecutionStatus.COMPLETED
        return ExecutionResult(status=status, stdout=stdout, stderr=stderr,
                               duration_ms=duration_ms)
    finally:
        if proc is not None and proc.poll() is None:
            _kill_group(proc)
        shutil.rmtree(scratch, ignore_errors=True)


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError, OSError):
        try:
            proc.kill()
        except OSError:
            pass


def _split_lines(text: str, policy: OutputPolicy) -> list[str]:
    if policy.normalize_line_endings:
        text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = text.split("\n")
    if policy.trim_trailing_ws:
        lines = [line.rstrip() for line in lines]
        while lines and lines[-1] == "":
            lines.pop()
    return lines


def _lines_equal(actual: str, expected: str, policy: OutputPolicy) -> bool:
    if policy.float_tolerance is None:
        return actual == expected
    a_tokens = actual.split()
    e_tokens = expected.split()
    if len(a_tokens) != len(e_tokens):
        return False
    for a_tok, e_tok in zip(a_tokens, e_tokens):
        try:
            a_num, e_num = float(a_tok), float(e_tok)
        except ValueError:
            if a_tok != e_tok:
                return False
            continue
        if not abs(a_num - e_num) <= policy.float_tolerance:
            return False
    return True


def compare_output(actual: str, expected: str,
                   policy: OutputPolicy = OutputPolicy()) -> Mismatch | None:
    """Compare program output against the expected text under a policy.

    Both sides get the same normalization, so the comparison is symmetric.
    Returns None when equal, otherwise the first divergence. With a float
    tolerance set, whitespace-separated numeric tokens compare within the
    tolerance and all other tokens compare exactly.
    """
    actual_lines = _split_lines(actual, policy)
    expected_lines = _split_lines(expected, policy)
    for idx in range(max(len(actual_lines), len(expected_lines))):
        a_line = actual_lines[idx] if idx < len(actual_lines) else None
        e_line = expected_lines[idx] if idx < len(expected_lines) else None
        if a_line is None or e_line is None or not _lines_equal(a_line, e_line, policy):
            return Mismatch(line=idx + 1, expected=e_line, actual=a_line)
    return None


def _verdict_for(result: ExecutionResult, example: IOExample) -> Verdict:
    if result.status is ExecutionStatus.TIMEOUT:
        return Verdict(VerdictLabel.TIMEOUT)
    if result.status is ExecutionStatus.MEMORY_EXCEEDED:
        return Verdict(VerdictLabel.MEMORY_EXCEEDED)
    if result.status is ExecutionStatus.RUNTIME_ERROR:
        return Verdict(VerdictLabel.RUNTIME_ERROR)
    mismatch = compare_output(result.stdout, example.expected_output, example.output_policy)
    if result.status is ExecutionStatus.OUTPUT_TRUNCATED and mismatch is None:
        # everything expected arrived, but the program kept flooding past the cap
        mismatch = Mismatch(
            line=len(_split_lines(result.stdout, example.output_policy)) + 1,
            expected=None,
            actual="(output truncated at limit)",
        )
    if mismatch is not None:
        return Verdict(VerdictLabel.WRONG_OUTPUT, mismatch)
    return Verdict(VerdictLabel.PASS)


def grade(source: str, io_examples, limits: ResourceLimits = DEFAULT_LIMITS,
          interpreter: InterpreterConfig = DEFAULT_INTERPRETER) -> GradeReport:
    """Run one independent execution per I/O example and collect verdicts.

    SetupError propagates: it reports an operational failure of the grading
    service, never a verdict against the program.
    """
    io_examples = list(io_examples)
    if not io_examples:
        raise ValueError("io_examples must be non-empty")
    verdicts = []
    for example in io_examples:
        result = execute(source, example.input, limits, interpreter)
        verdicts.append(_verdict_for(result, example))
    return GradeReport(
        verdicts=tuple(verdicts),
        all_pass=all(v.label is VerdictLabel.PASS for v in verdicts),
    )


class RunnerPool:
    """Bounded concurrency gate for sandbox executions.

    At most ``max_concurrent`` slots are held at once; up to ``max_waiting``
    callers queue FIFO for a released slot, and everyone beyond that is
    turned away with SandboxBusy.
    """

    def __init__(self, max_concurrent: int = 4, max_waiting: int = 0,
                 retry_after_s: float = 1.0):
        if max_concurrent < 1:
            raise ValueError("max_concurrent must be >= 1")
        self._max_concurrent = max_concurrent
        self._max_waiting = max_waiting
        self._retry_after_s = retry_after_s
        self._lock = threading.Lock()
        self._active = 0
        self._waiters: deque[threading.Event] = deque()

    def acquire(self) -> None:
        with self._lock:
            if self._active < self._max_concurrent:
                self._active += 1
                return
            if len(self._waiters) >= self._max_waiting:
                raise SandboxBusy(self._retry_after_s)
            ticket = threading.Event()
            self._waiters.append(ticket)
        ticket.wait()

    def release(self) -> None:
        with self._lock:
            if self._waiters:
                self._waiters.popleft().set()  # slot handed over, count unchanged
            else:
                self._active = max(0, self._active - 1)

    @contextmanager
    def slot(self):
        self.acquire()
        try:
            yield
        finally:
            self.release()

    @property
    def active(self) -> int:
        with self._lock:
            return self._active
