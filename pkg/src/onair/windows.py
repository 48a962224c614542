"""Sliding temporal windows over a frame stream."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class WindowPlan:
    num_frames: int
    window_len: int
    window_stride: int
    windows: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def last_use(self) -> list[int]:
        """Index of the last window containing each frame."""
        last = [0] * self.num_frames
        for w, (s, e) in enumerate(self.windows):
            for f in range(s, e):
                last[f] = w
        return last


def sliding_windows(num_frames: int, window_len: int, window_stride: int) -> WindowPlan:
    """Windows ``[s, s + window_len)`` starting at 0, ``window_stride`` apart.

    The final window is clamped so that it ends at ``num_frames``.
    """
    if window_len < 1 or window_stride < 1:
        raise ValueError("window_len and window_stride must be >= 1")
    if window_stride > window_len:
        raise ValueError(f"window_stride {window_stride} exceeds window_len {window_len}; frames would be skipped")
    if window_len > num_frames:
        raise ValueError(f"window_len {window_len} exceeds num_frames {num_frames}")
    last = num_frames - window_len
    starts = list(range(0, last + 1, window_stride))
    if starts[-1] != last:
        starts.append(last)
    return WindowPlan(
        num_frames=num_frames,
        window_len=window_len,
        window_stride=window_stride,
        windows=tuple((s, s + window_len) for s in starts),
    )
