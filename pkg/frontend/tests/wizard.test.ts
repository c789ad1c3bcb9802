import { describe, expect, it } from "vitest";

import { Wizard } from "../src/wizard.js";

interface S {
  a: string;
  b: string;
}

function makeWizard() {
  return new Wizard<S>(
    [
      { id: "one", title: "One", validate: (s) => (s.a ? [] : ["a required"]) },
      { id: "two", title: "Two", validate: (s) => (s.b ? [] : ["b required"]) },
      { id: "three", title: "Three", validate: () => [] },
    ],
    { a: "", b: "" },
  );
}

describe("wizard step gating", () => {
  it("cannot advance past an invalid step", () => {
    const w = makeWizard();
    expect(w.next()).toBe(false);
    expect(w.current).toBe(0);
    w.update({ a: "x" });
    expect(w.next()).toBe(true);
    expect(w.current).toBe(1);
  });

  it("cannot jump ahead over invalid steps", () => {
    const w = makeWizard();
    w.update({ a: "x" });
    expect(w.canEnter(2)).toBe(false);
    expect(w.goto(2)).toBe(false);
    w.update({ b: "y" });
    expect(w.goto(2)).toBe(true);
    expect(w.current).toBe(2);
  });

  it("going back is always allowed", () => {
    const w = makeWizard();
    w.update({ a: "x", b: "y" });
    w.next();
    w.next();
    expect(w.back()).toBe(true);
    expect(w.back()).toBe(true);
    expect(w.back()).toBe(false);
  });

  it("submit unlocks only when every step is valid", () => {
    const w = makeWizard();
    expect(w.canSubmit()).toBe(false);
    w.update({ a: "x" });
    expect(w.canSubmit()).toBe(false);
    w.update({ b: "y" });
    expect(w.canSubmit()).toBe(true);
  });

  it("reports step errors", () => {
    const w = makeWizard();
    expect(w.errors(0)).toEqual(["a required"]);
    expect(w.errors(2)).toEqual([]);
  });
});
