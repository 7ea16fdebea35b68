import { describe, expect, it } from "vitest";
import { VirtualBar, normalizedPositions } from "../src/bar.js";
import type { LayoutInfo } from "../src/protocol.js";

const LAYOUT: LayoutInfo = {
  columns: 5,
  rows: 1,
  column_positions_mm: [-98, -49, 0, 49, 98],
  sensor_max: 1.0,
  variant_tag: "center-line",
};

describe("normalizedPositions", () => {
  it("maps the prototype bar to [-1, -0.5, 0, 0.5, 1]", () => {
    expect(normalizedPositions(LAYOUT)).toEqual([-1, -0.5, 0, 0.5, 1]);
  });
});

describe("VirtualBar", () => {
  it("emits an explicit idle frame when untouched", () => {
    const bar = new VirtualBar(LAYOUT);
    expect(bar.idle).toBe(true);
    expect(bar.readings()).toEqual([[0, 0, 0, 0, 0]]);
  });

  it("synthesizes the same gaussian bump shape as the simulator", () => {
    const bar = new VirtualBar(LAYOUT);
    bar.pointerPress(0.3, 0.8);
    const row = bar.readings()[0];
    const width = bar.pressWidth;
    for (let i = 0; i < 5; i++) {
      const s = [-1, -0.5, 0, 0.5, 1][i];
      const expected = 0.8 * Math.exp(-((s - 0.3) ** 2) / (2 * width * width));
      expect(row[i]).toBeCloseTo(expected, 12);
    }
  });

  it("column count always validates against the layout", () => {
    const wide: LayoutInfo = { ...LAYOUT, columns: 7, rows: 2,
      column_positions_mm: [-90, -60, -30, 0, 30, 60, 90] };
    const bar = new VirtualBar(wide);
    bar.pointerPress(-0.2, 1.0);
    const frame = bar.readings();
    expect(frame.length).toBe(2);
    expect(frame[0].length).toBe(7);
    expect(frame[0]).toEqual(frame[1]);
  });

  it("keyboard arrows step cop and magnitude with clamping", () => {
    const bar = new VirtualBar(LAYOUT);
    for (let i = 0; i < 30; i++) bar.keyDown("ArrowRight");
    expect(bar.cop).toBe(1);
    for (let i = 0; i < 10; i++) bar.keyDown("ArrowUp");
    expect(bar.magnitude).toBeCloseTo(0.5, 12);
    for (let i = 0; i < 30; i++) bar.keyDown("ArrowUp");
    expect(bar.magnitude).toBe(1);
    expect(bar.engaged).toBe(true);
    bar.keyDown("Space");
    expect(bar.idle).toBe(true);
    expect(bar.readings()[0].every((v) => v === 0)).toBe(true);
  });

  it("pointer release drops back to idle", () => {
    const bar = new VirtualBar(LAYOUT);
    bar.pointerPress(0.0, 1.0);
    expect(bar.readings()[0][2]).toBeCloseTo(1.0, 12);
    bar.pointerRelease();
    expect(bar.idle).toBe(true);
    expect(bar.readings()[0]).toEqual([0, 0, 0, 0, 0]);
  });

  it("thumb keys press only the extreme columns", () => {
    const bar = new VirtualBar(LAYOUT);
    bar.keyDown("KeyZ");
    expect(bar.readings()[0]).toEqual([0.9, 0, 0, 0, 0]);
    bar.keyDown("KeyX");
    expect(bar.readings()[0]).toEqual([0.9, 0, 0, 0, 0.9]);
    bar.keyUp("KeyZ");
    expect(bar.readings()[0]).toEqual([0, 0, 0, 0, 0.9]);
    bar.keyUp("KeyX");
    expect(bar.idle).toBe(true);
  });

  it("thumbs keep the interior quiet even while the body presses", () => {
    const bar = new VirtualBar(LAYOUT);
    bar.pointerPress(0.0, 1.0);
    bar.keyDown("KeyZ");
    bar.keyDown("KeyX");
    const row = bar.readings()[0];
    expect(row[0]).toBe(0.9);
    expect(row[4]).toBe(0.9);
    expect(row[1]).toBe(0);
    expect(row[2]).toBe(0);
    expect(row[3]).toBe(0);
  });

  it("ignores keys it does not own", () => {
    const bar = new VirtualBar(LAYOUT);
    expect(bar.keyDown("KeyQ")).toBe(false);
    expect(bar.keyUp("Enter")).toBe(false);
  });
});
