import { describe, expect, it } from "vitest";

import { baseOf, colorFor, legend } from "../src/colors.js";

describe("legend", () => {
  it("covers all 25 classes grouped by base endpoint", () => {
    const groups = legend();
    const names = groups.flatMap((g) => g.classes.map((c) => c.name));
    expect(names).toHaveLength(25);
    expect(new Set(names).size).toBe(25);
    expect(groups.map((g) => g.base)).toEqual(["OS", "PFS", "DFS", "ORR", "DoR", "time_point"]);
  });

  it("shares a hue within a family and separates bounds by shade", () => {
    const os = colorFor("OS");
    const osCil = colorFor("OS_CIL");
    expect(os).not.toBe(osCil);
    const hue = (c: string) => c.match(/hsl\((\d+)/)?.[1];
    expect(hue(os)).toBe(hue(osCil));
    expect(hue(colorFor("PFS"))).not.toBe(hue(os));
  });

  it("derives the base endpoint from a class name", () => {
    expect(baseOf("OS_percent_CIH")).toBe("OS");
    expect(baseOf("time_point")).toBe("time_point");
  });
});
