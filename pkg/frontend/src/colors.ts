/** Class colour model: one hue per base endpoint, shades per variant. */

const BASE_HUES: Record<string, number> = {
  OS: 210, // blue
  PFS: 130, // green
  DFS: 30, // orange
  ORR: 0, // red
  DoR: 275, // purple
};

export const TIME_POINT_COLOR = "hsl(0, 0%, 55%)";

export function baseOf(className: string): string {
  if (className === "time_point") return "time_point";
  return className.split("_")[0];
}

export function isBound(className: string): boolean {
  return className.endsWith("_CIL") || className.endsWith("_CIH");
}

/** Deterministic colour for each of the 25 classes. */
export function colorFor(className: string): string {
  if (className === "time_point") return TIME_POINT_COLOR;
  const hue = BASE_HUES[baseOf(className)];
  if (hue === undefined) return "hsl(0, 0%, 30%)";
  const percent = className.includes("_percent");
  const saturation = percent ? 85 : 65;
  const lightness = isBound(className) ? 72 : 45;
  return `hsl(${hue}, ${saturation}%, ${lightness}%)`;
}

export interface LegendGroup {
  base: string;
  classes: { name: string; color: string }[];
}

const VARIANTS: Record<string, string[]> = {
  OS: ["", "_CIH", "_CIL", "_percent", "_percent_CIH", "_percent_CIL"],
  PFS: ["", "_CIH", "_CIL", "_percent", "_percent_CIH", "_percent_CIL"],
  DFS: ["", "_CIH", "_CIL", "_percent", "_percent_CIH", "_percent_CIL"],
  ORR: ["", "_CIH", "_CIL"],
  DoR: ["", "_CIH", "_CIL"],
};

/** The full 25-class legend, grouped by base endpoint. */
export function legend(): LegendGroup[] {
  const groups: LegendGroup[] = [];
  for (const base of Object.keys(VARIANTS)) {
    groups.push({
      base,
      classes: VARIANTS[base].map((suffix) => {
        const name = `${base}${suffix}`;
        return { name, color: colorFor(name) };
      }),
    });
  }
  groups.push({
    base: "time_point",
    classes: [{ name: "time_point", color: TIME_POINT_COLOR }],
  });
  return groups;
}
