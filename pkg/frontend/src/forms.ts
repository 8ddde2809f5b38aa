// Pure form <-> record conversion and display formatting.
// Kept free of DOM access so the logic is unit-testable.

export const STANDARD_FREQUENCIES = [
  125, 250, 500, 750, 1000, 1500, 2000, 3000, 4000, 6000, 8000,
];

export const BC_MAX_FREQUENCY = 4000;

export interface ExamKeyJson {
  patient_id: string;
  exam_date: string;
}

export function examKey(patientId: string, examDate: string): ExamKeyJson {
  return { patient_id: patientId, exam_date: examDate };
}

export function isIsoDate(value: string): boolean {
  if (!/^\d{4}-\d{2}-\d{2}$/.test(value)) return false;
  const d = new Date(value + "T00:00:00Z");
  return !Number.isNaN(d.getTime()) && d.toISOString().slice(0, 10) === value;
}

/**
 * Parse a threshold table typed as "freq:level" pairs, e.g.
 * "500:30, 1000:40 2000:50". Returns null for blank input (no ear tested).
 */
export function parseThresholds(
  text: string,
  boneConduction = false,
): Record<string, number> | null {
  const trimmed = text.trim();
  if (!trimmed) return null;
  const points: Record<string, number> = {};
  for (const token of trimmed.split(/[\s,;]+/)) {
    const m = /^(\d+):(-?\d+)$/.exec(token);
    if (!m) throw new Error(`cannot read threshold "${token}" (use freq:level)`);
    const freq = Number(m[1]);
    const level = Number(m[2]);
    if (!STANDARD_FREQUENCIES.includes(freq))
      throw new Error(`${freq} Hz is not a standard audiometric frequency`);
    if (boneConduction && freq > BC_MAX_FREQUENCY)
      throw new Error(`bone conduction is limited to ${BC_MAX_FREQUENCY} Hz`);
    if (level < -10 || level > 120)
      throw new Error(`level ${level} dB HL is outside [-10, 120]`);
    points[String(freq)] = level;
  }
  return points;
}

export function thresholdsToText(points: Record<string, number> | null): string {
  if (!points) return "";
  return Object.entries(points)
    .sort((a, b) => Number(a[0]) - Number(b[0]))
    .map(([f, lv]) => `${f}:${lv}`)
    .join(" ");
}

export function buildPureToneRecord(
  key: ExamKeyJson,
  category: string,
  rightText: string,
  leftText: string,
): Record<string, unknown> {
  const bc = category.startsWith("bc_");
  const right = parseThresholds(rightText, bc);
  const left = parseThresholds(leftText, bc);
  if (right === null && left === null)
    throw new Error("enter thresholds for at least one ear");
  return { key, category, right, left };
}

/**
 * Parse speech trials, one per line: "intensity percent", e.g. "30 55".
 */
export function parseSpeechTrials(text: string): [number, number][] {
  const trials: [number, number][] = [];
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const m = /^(-?\d+)[\s,]+(\d+(?:\.\d+)?)$/.exec(trimmed);
    if (!m) throw new Error(`cannot read trial "${trimmed}" (use "intensity percent")`);
    const intensity = Number(m[1]);
    const pct = Number(m[2]);
    if (intensity % 5 !== 0)
      throw new Error(`intensity ${intensity} dB is not a multiple of 5`);
    if (pct < 0 || pct > 100) throw new Error(`percent ${pct} is outside [0, 100]`);
    trials.push([intensity, pct]);
  }
  if (!trials.length) throw new Error("enter at least one trial");
  return trials;
}

export function buildSpeechRecord(
  key: ExamKeyJson,
  ear: string,
  trialsText: string,
  sdScore: string,
  sdIntensity: string,
): Record<string, unknown> {
  return {
    key,
    ear,
    trials: parseSpeechTrials(trialsText),
    sd_score: sdScore.trim() ? Number(sdScore) : null,
    sd_intensity: sdIntensity.trim() ? Number(sdIntensity) : null,
  };
}

/**
 * Parse tympanogram samples, one per line: "pressure compliance".
 * Pressures must already be in ascending order.
 */
export function parseTympanogramSamples(text: string): [number, number][] {
  const samples: [number, number][] = [];
  let prev: number | null = null;
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const m = /^(-?\d+)[\s,]+(\d+(?:\.\d+)?)$/.exec(trimmed);
    if (!m) throw new Error(`cannot read sample "${trimmed}" (use "pressure compliance")`);
    const pressure = Number(m[1]);
    if (pressure < -600 || pressure > 400)
      throw new Error(`pressure ${pressure} daPa is outside [-600, 400]`);
    if (prev !== null && pressure <= prev)
      throw new Error("pressures must be strictly increasing");
    prev = pressure;
    samples.push([pressure, Number(m[2])]);
  }
  if (samples.length < 2) throw new Error("enter at least two samples");
  return samples;
}

export interface CaloricDurations {
  right44: [number, number];
  right30: [number, number];
  left44: [number, number];
  left30: [number, number];
}

export function buildCaloricRecord(
  key: ExamKeyJson,
  d: CaloricDurations,
): Record<string, unknown> {
  const entries = [
    { ear: "right", temperature: "44C", span: d.right44 },
    { ear: "right", temperature: "30C", span: d.right30 },
    { ear: "left", temperature: "44C", span: d.left44 },
    { ear: "left", temperature: "30C", span: d.left30 },
  ].map(({ ear, temperature, span }) => {
    const [start, end] = span;
    if (start < 0) throw new Error(`${ear} ${temperature}: start must be >= 0`);
    if (end < start) throw new Error(`${ear} ${temperature}: end is before start`);
    return { ear, temperature, nystagmus_start: start, nystagmus_end: end };
  });
  return { key, entries };
}

export function buildPatientRecord(
  key: ExamKeyJson,
  fields: {
    name: string;
    age: string;
    sex: string;
    contact: string;
    symptoms: string;
    diagnosis: string;
    prescriptions: string;
  },
): Record<string, unknown> {
  const age = Number(fields.age);
  if (!Number.isInteger(age) || age < 0 || age > 150)
    throw new Error("age must be an integer in [0, 150]");
  return { key, ...fields, age };
}

export function fmt1(value: number | null | undefined): string {
  if (value === null || value === undefined) return "—";
  return value.toFixed(1);
}

export const CATEGORY_LABELS: Record<string, string> = {
  patient: "Patient",
  ac_masked: "AC masked",
  ac_unmasked: "AC unmasked",
  bc_masked: "BC masked",
  bc_unmasked: "BC unmasked",
  ac_aided: "AC aided",
  loudness_level: "Loudness level",
  sound_field: "Sound field",
  hearing_disability: "Hearing disability",
  ablb: "ABLB",
  sisi: "SISI",
  tone_decay: "Tone decay",
  stenger: "Stenger",
  tuning_fork: "Tuning fork",
  speech: "Speech audiometry",
  impedance: "Impedance audiometry",
  caloric: "Bithermal caloric",
};
