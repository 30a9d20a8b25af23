// Display formatting for the twelve measurements and their level labels.

export const MEASUREMENT_ORDER = [
  "height",
  "neck_length",
  "arm_length",
  "legs_length",
  "shoulder_breadth",
  "arms_relation",
  "shoulders_relation",
  "waist_thickness",
  "hip_thickness",
  "leg_thickness",
  "volume",
  "bmi",
] as const;

export type MeasurementName = (typeof MEASUREMENT_ORDER)[number];

export const LEVELS = ["very_low", "low", "average", "high", "very_high"] as const;

const RATIOS = new Set(["arms_relation", "shoulders_relation"]);

export function displayName(name: string): string {
  if (name === "bmi") return "BMI";
  return name.replace(/_/g, " ");
}

/** Value with its display unit: meters, liters, or unitless. */
export function formatMeasurement(name: string, value: number): string {
  if (name === "volume") return `${(value * 1000).toFixed(1)} L`;
  if (name === "bmi") return value.toFixed(1);
  if (RATIOS.has(name)) return value.toFixed(3);
  return `${value.toFixed(3)} m`;
}

/** Signed difference in the same unit as formatMeasurement. */
export function formatDelta(name: string, delta: number): string {
  const sign = delta >= 0 ? "+" : "-";
  return sign + formatMeasurement(name, Math.abs(delta));
}

/** -1, 0, or +1 with a dead zone for float dust. */
export function deltaSign(delta: number, epsilon = 1e-9): -1 | 0 | 1 {
  if (delta > epsilon) return 1;
  if (delta < -epsilon) return -1;
  return 0;
}

/** CSS tone for a level chip: extremes pop, average stays quiet. */
export function labelTone(level: string): "extreme" | "notable" | "neutral" {
  if (level === "very_low" || level === "very_high") return "extreme";
  if (level === "low" || level === "high") return "notable";
  return "neutral";
}

export function displayLevel(level: string): string {
  return level.replace(/_/g, " ");
}
