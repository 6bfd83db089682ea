import { describe, expect, it } from "vitest";

import { classBars, pieSlices } from "../src/charts.js";
import { SCHEMA, stats } from "./helpers.js";

describe("classBars", () => {
  it("bar heights equal the stats counts for every schema class", () => {
    const doc = stats({ classes: { plastic: 4, metal: 3, wood: 2 } });
    const bars = classBars(doc, SCHEMA);
    expect(bars).toHaveLength(7);
    for (const bar of bars) {
      expect(bar.value).toBe(doc.classes[bar.label] ?? 0);
    }
    const byLabel = Object.fromEntries(bars.map((b) => [b.label, b.value]));
    expect(byLabel).toEqual({
      wood: 2,
      cage: 0,
      "fishing gear": 0,
      nature: 0,
      plastic: 4,
      metal: 3,
      wheel: 0,
    });
  });

  it("keeps schema order and schema colors", () => {
    const bars = classBars(stats(), SCHEMA);
    expect(bars.map((b) => b.label)).toEqual(SCHEMA.labels);
    for (const bar of bars) {
      expect(bar.color).toBe(SCHEMA.colors[bar.label]);
    }
  });

  it("appends counts for labels outside the schema rather than losing them", () => {
    const doc = stats({ classes: { plastic: 1, mystery: 2 } });
    const bars = classBars(doc, SCHEMA);
    expect(bars.map((b) => b.label)).toEqual([...SCHEMA.labels, "mystery"]);
    expect(bars.at(-1)?.value).toBe(2);
  });
});

describe("pieSlices", () => {
  it("covers the full circle in proportion to the counts", () => {
    const slices = pieSlices(classBars(stats({ classes: { plastic: 3, metal: 1 } }), SCHEMA));
    expect(slices).toHaveLength(2);
    const total = slices.reduce((sum, s) => sum + (s.endAngle - s.startAngle), 0);
    expect(total).toBeCloseTo(2 * Math.PI, 10);
    const plastic = slices.find((s) => s.label === "plastic")!;
    expect(plastic.endAngle - plastic.startAngle).toBeCloseTo(1.5 * Math.PI, 10);
  });

  it("skips empty classes and handles an empty survey", () => {
    expect(pieSlices(classBars(stats({ classes: {} }), SCHEMA))).toEqual([]);
    const slices = pieSlices(classBars(stats({ classes: { wheel: 5 } }), SCHEMA));
    expect(slices.map((s) => s.label)).toEqual(["wheel"]);
  });

  it("slices are contiguous", () => {
    const slices = pieSlices(classBars(stats({ classes: { plastic: 2, metal: 1, wood: 1 } }), SCHEMA));
    for (let i = 1; i < slices.length; i++) {
      expect(slices[i]?.startAngle).toBeCloseTo(slices[i - 1]?.endAngle ?? NaN, 12);
    }
  });
});
