#!/usr/bin/env python3
"""Regenerates the bundled ASCII maps under data/maps/."""
import argparse
import pathlib


class Grid:
    def __init__(self, width_m, height_m, res, origin=(0.0, 0.0), fill=False):
        self.res = res
        self.origin = origin
        self.w = round(width_m / res)
        self.h = round(height_m / res)
        self.cells = [[fill] * self.w for _ in range(self.h)]  # [y][x], y = 0 at the bottom

    def rect(self, x0, y0, x1, y1, occupied):
        """Sets every cell whose center lies in [x0, x1) x [y0, y1)."""
        ox, oy = self.origin
        for cy in range(self.h):
            yc = oy + (cy + 0.5) * self.res
            if not (y0 <= yc < y1):
                continue
            for cx in range(self.w):
                xc = ox + (cx + 0.5) * self.res
                if x0 <= xc < x1:
                    self.cells[cy][cx] = occupied

    def border(self, thickness=1):
        for cy in range(self.h):
            for cx in range(self.w):
                if cx < thickness or cy < thickness or cx >= self.w - thickness or cy >= self.h - thickness:
                    self.cells[cy][cx] = True

    def text(self):
        lines = [f"map {self.w} {self.h} {self.res:g} {self.origin[0]:g} {self.origin[1]:g}"]
        for cy in reversed(range(self.h)):
            lines.append("".join("#" if c else "." for c in self.cells[cy]))
        return "\n".join(lines) + "\n"


def ward():
    # Corridor with two gated rooms: one below (location 0), one above (location 3).
    g = Grid(20.0, 15.0, 0.25, fill=True)
    g.rect(0.5, 5.0, 19.5, 10.0, False)   # corridor
    g.rect(5.0, 0.5, 10.0, 4.5, False)    # room 0
    g.rect(6.75, 4.5, 8.25, 5.0, False)   # room 0 door
    g.rect(10.0, 10.5, 15.0, 14.5, False)  # room 3
    g.rect(11.75, 10.0, 13.25, 10.5, False)  # room 3 door
    return g


def open20():
    return Grid(10.0, 10.0, 0.5)


def fig6():
    g = Grid(15.0, 35.0, 0.5, origin=(-5.0, -30.0))
    g.border()
    return g


def plaza60():
    g = Grid(30.0, 30.0, 0.5)
    g.border()
    for px in (7.0, 15.0, 23.0):
        for py in (7.0, 15.0, 23.0):
            if (px, py) == (15.0, 15.0):
                continue
            g.rect(px - 1.0, py - 1.0, px + 1.0, py + 1.0, True)
    return g


MAPS = {"ward": ward, "open20": open20, "fig6": fig6, "plaza60": plaza60}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "maps"))
    args = ap.parse_args()
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, make in MAPS.items():
        (out / f"{name}.map").write_text(make().text())
        print(f"wrote {out / (name + '.map')}")


if __name__ == "__main__":
    main()
