import { describe, expect, it } from "vitest";

import {
  MEASUREMENT_ORDER,
  deltaSign,
  displayLevel,
  displayName,
  formatDelta,
  formatMeasurement,
  labelTone,
} from "../src/format";

describe("formatMeasurement", () => {
  it("prints lengths in meters", () => {
    expect(formatMeasurement("height", 1.68436)).toBe("1.684 m");
    expect(formatMeasurement("waist_thickness", 0.8215)).toBe("0.822 m");
  });

  it("prints volume in liters and bmi bare", () => {
    expect(formatMeasurement("volume", 0.0631953)).toBe("63.2 L");
    expect(formatMeasurement("bmi", 21.57)).toBe("21.6");
  });

  it("prints ratios unitless", () => {
    expect(formatMeasurement("arms_relation", 0.45219)).toBe("0.452");
  });
});

describe("formatDelta", () => {
  it("keeps the sign and the unit", () => {
    expect(formatDelta("height", 0.0123)).toBe("+0.012 m");
    expect(formatDelta("height", -0.0123)).toBe("-0.012 m");
    expect(formatDelta("volume", -0.0021)).toBe("-2.1 L");
  });
});

describe("deltaSign", () => {
  it("has a dead zone for float dust", () => {
    expect(deltaSign(0.01)).toBe(1);
    expect(deltaSign(-0.01)).toBe(-1);
    expect(deltaSign(1e-12)).toBe(0);
    expect(deltaSign(-1e-12)).toBe(0);
  });
});

describe("labels", () => {
  it("tones chips by how extreme the level is", () => {
    expect(labelTone("very_low")).toBe("extreme");
    expect(labelTone("very_high")).toBe("extreme");
    expect(labelTone("low")).toBe("notable");
    expect(labelTone("high")).toBe("notable");
    expect(labelTone("average")).toBe("neutral");
  });

  it("humanizes names and levels", () => {
    expect(displayName("legs_length")).toBe("legs length");
    expect(displayName("bmi")).toBe("BMI");
    expect(displayLevel("very_high")).toBe("very high");
  });
});

describe("MEASUREMENT_ORDER", () => {
  it("lists all twelve measurements, ratios after lengths", () => {
    expect(MEASUREMENT_ORDER).toHaveLength(12);
    expect(MEASUREMENT_ORDER[0]).toBe("height");
    expect(MEASUREMENT_ORDER[10]).toBe("volume");
    expect(MEASUREMENT_ORDER[11]).toBe("bmi");
  });
});
