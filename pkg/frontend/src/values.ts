// Tagged value encoding shared with the server and the sandbox worker.
// Integers travel as decimal strings so magnitude is unbounded.

export type TaggedValue =
  | { type: "null" }
  | { type: "bool"; value: boolean }
  | { type: "int"; value: string }
  | { type: "rat"; num: string; den: string }
  | { type: "float"; value: string }
  | { type: "str"; value: string }
  | { type: "list"; items: TaggedValue[] }
  | { type: "matrix"; rows: TaggedValue[][] };

export interface RenderedValue {
  exact?: string;
  decimal?: string;
}

const DECIMAL_PREVIEW_LIMIT = 2n ** 53n;

function abs(n: bigint): bigint {
  return n < 0n ? -n : n;
}

/** Seven significant digits, trailing zeros trimmed (matches server previews). */
function sevenSig(x: number): string {
  let text = x.toPrecision(7);
  if (text.includes("e")) {
    const [mantissa, exponent] = text.split("e");
    return trimZeros(mantissa!) + "e" + exponent;
  }
  return trimZeros(text);
}

function trimZeros(text: string): string {
  if (!text.includes(".")) return text;
  return text.replace(/0+$/, "").replace(/\.$/, "");
}

function renderInline(v: TaggedValue): string {
  switch (v.type) {
    case "null":
      return "NULL";
    case "bool":
      return v.value ? "true" : "false";
    case "int":
      return v.value;
    case "rat":
      return `${v.num}/${v.den}`;
    case "float":
      return v.value;
    case "str":
      return v.value;
    case "list":
      return `[${v.items.map(renderInline).join(", ")}]`;
    case "matrix":
      return `[${v.rows.map((row) => `[${row.map(renderInline).join(", ")}]`).join(", ")}]`;
  }
}

/** Exact and decimal display strings; either side may be absent. */
export function renderValue(v: TaggedValue): RenderedValue {
  switch (v.type) {
    case "int":
      return { exact: v.value };
    case "rat": {
      const exact = `${v.num}/${v.den}`;
      const num = BigInt(v.num);
      const den = BigInt(v.den);
      if (abs(num) > DECIMAL_PREVIEW_LIMIT || den > DECIMAL_PREVIEW_LIMIT) {
        return { exact };
      }
      return { exact, decimal: sevenSig(Number(num) / Number(den)) };
    }
    case "float":
      return { decimal: v.value };
    default:
      return { exact: renderInline(v) };
  }
}

/** Structural equality of tagged values (the parity check across modes). */
export function sameValue(a: TaggedValue, b: TaggedValue): boolean {
  if (a.type !== b.type) return false;
  switch (a.type) {
    case "null":
      return true;
    case "bool":
      return a.value === (b as typeof a).value;
    case "int":
      return BigInt(a.value) === BigInt((b as typeof a).value);
    case "rat": {
      const other = b as typeof a;
      return BigInt(a.num) === BigInt(other.num) && BigInt(a.den) === BigInt(other.den);
    }
    case "float":
      return Number(a.value) === Number((b as typeof a).value);
    case "str":
      return a.value === (b as typeof a).value;
    case "list": {
      const other = b as typeof a;
      return a.items.length === other.items.length && a.items.every((x, i) => sameValue(x, other.items[i]!));
    }
    case "matrix": {
      const other = b as typeof a;
      return (
        a.rows.length === other.rows.length &&
        a.rows.every(
          (row, i) =>
            row.length === other.rows[i]!.length && row.every((x, j) => sameValue(x, other.rows[i]![j]!)),
        )
      );
    }
  }
}

/** Validate an untrusted object coming off the wire. */
export function asTaggedValue(raw: unknown): TaggedValue {
  if (typeof raw !== "object" || raw === null || !("type" in raw)) {
    throw new Error("not a tagged value");
  }
  const v = raw as Record<string, unknown>;
  switch (v.type) {
    case "null":
      return { type: "null" };
    case "bool":
      if (typeof v.value !== "boolean") throw new Error("bad bool");
      return { type: "bool", value: v.value };
    case "int":
      if (typeof v.value !== "string") throw new Error("bad int");
      BigInt(v.value); // throws on garbage
      return { type: "int", value: v.value };
    case "rat":
      if (typeof v.num !== "string" || typeof v.den !== "string") throw new Error("bad rat");
      if (BigInt(v.den) === 0n) throw new Error("zero denominator");
      return { type: "rat", num: v.num, den: v.den };
    case "float": {
      const value = typeof v.value === "number" ? String(v.value) : v.value;
      if (typeof value !== "string") throw new Error("bad float");
      return { type: "float", value };
    }
    case "str":
      if (typeof v.value !== "string") throw new Error("bad str");
      return { type: "str", value: v.value };
    case "list":
      if (!Array.isArray(v.items)) throw new Error("bad list");
      return { type: "list", items: v.items.map(asTaggedValue) };
    case "matrix":
      if (!Array.isArray(v.rows)) throw new Error("bad matrix");
      return { type: "matrix", rows: v.rows.map((row) => (row as unknown[]).map(asTaggedValue)) };
    default:
      throw new Error(`unknown value type ${String(v.type)}`);
  }
}
