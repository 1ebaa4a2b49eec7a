import { describe, expect, it } from "vitest";

import { asTaggedValue, renderValue, sameValue, type TaggedValue } from "../src/values.js";
import { loadGoldenCorpus } from "./helpers.js";

describe("renderValue", () => {
  it("renders small rationals with a 7-digit preview", () => {
    expect(renderValue({ type: "rat", num: "37", den: "3" })).toEqual({
      exact: "37/3",
      decimal: "12.33333",
    });
  });

  it("renders huge rationals exactly only", () => {
    const v: TaggedValue = { type: "rat", num: "9135000000000000000026600000", den: "3" };
    expect(renderValue(v)).toEqual({ exact: "9135000000000000000026600000/3" });
  });

  it("renders integers exactly", () => {
    expect(renderValue({ type: "int", value: "70" })).toEqual({ exact: "70" });
  });

  it("passes float strings through", () => {
    expect(renderValue({ type: "float", value: "36.98224852071006" })).toEqual({
      decimal: "36.98224852071006",
    });
  });

  it("renders null as NULL verbatim", () => {
    expect(renderValue({ type: "null" })).toEqual({ exact: "NULL" });
  });

  it("renders matrices as bracketed rows", () => {
    const v: TaggedValue = {
      type: "matrix",
      rows: [
        [{ type: "int", value: "1" }, { type: "int", value: "2" }],
        [{ type: "int", value: "3" }, { type: "int", value: "4" }],
      ],
    };
    expect(renderValue(v)).toEqual({ exact: "[[1, 2], [3, 4]]" });
  });

  it("trims trailing zeros from previews", () => {
    expect(renderValue({ type: "rat", num: "1", den: "2" })).toEqual({
      exact: "1/2",
      decimal: "0.5",
    });
  });
});

describe("sameValue", () => {
  it("compares ints beyond double precision", () => {
    const a: TaggedValue = { type: "int", value: "9135000000000000000026600000" };
    const b: TaggedValue = { type: "int", value: "9135000000000000000026600001" };
    expect(sameValue(a, a)).toBe(true);
    expect(sameValue(a, b)).toBe(false);
  });

  it("compares nested structures", () => {
    const m = (x: string): TaggedValue => ({
      type: "matrix",
      rows: [[{ type: "int", value: x }]],
    });
    expect(sameValue(m("5"), m("5"))).toBe(true);
    expect(sameValue(m("5"), m("6"))).toBe(false);
  });

  it("distinguishes types", () => {
    expect(sameValue({ type: "int", value: "1" }, { type: "float", value: "1" })).toBe(false);
  });
});

describe("asTaggedValue", () => {
  it("accepts every golden expected value", () => {
    for (const entry of loadGoldenCorpus()) {
      expect(asTaggedValue(entry.expected)).toEqual(entry.expected);
    }
  });

  it("rejects malformed objects", () => {
    expect(() => asTaggedValue({})).toThrow();
    expect(() => asTaggedValue({ type: "int", value: "abc" })).toThrow();
    expect(() => asTaggedValue({ type: "rat", num: "1", den: "0" })).toThrow();
    expect(() => asTaggedValue({ type: "mystery" })).toThrow();
  });
});
