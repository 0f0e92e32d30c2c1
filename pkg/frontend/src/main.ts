/** App entry: fetch metadata, build knobs, wire stream + audio + views. */

import { FramePlayer } from "./audio.js";
import { buildKnobSpecs, clampValue, formatKnobValue } from "./knobs.js";
import type { KnobSpec } from "./knobs.js";
import { AudioStream } from "./stream.js";
import type { StreamStatus } from "./stream.js";
import { KnobThrottle } from "./throttle.js";
import type { ModelMetadata, ServerMessage } from "./types.js";
import { ScopeViews } from "./views.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function wsUrl(path: string): string {
  const proto = location.protocol === "https:" ? "wss:" : "ws:";
  return `${proto}//${location.host}${path}`;
}

interface KnobRow {
  spec: KnobSpec;
  slider: HTMLInputElement;
  readout: HTMLSpanElement;
  value: number;
}

function buildKnobRow(
  spec: KnobSpec,
  onChange: (name: string, value: number) => void,
): { row: KnobRow; root: HTMLElement } {
  const root = document.createElement("div");
  root.className = "knob";
  const title = document.createElement("label");
  title.textContent = spec.title;
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = String(spec.min);
  slider.max = String(spec.max);
  slider.step = "0.01";
  slider.value = String(spec.initial);
  const readout = document.createElement("span");
  readout.className = "readout";
  readout.textContent = formatKnobValue(spec, spec.initial);
  const row: KnobRow = { spec, slider, readout, value: spec.initial };
  slider.addEventListener("input", () => {
    const v = clampValue(Number(slider.value));
    row.value = v;
    readout.textContent = formatKnobValue(spec, v);
    onChange(spec.name, v);
  });
  root.append(title, slider, readout);
  return { row, root };
}

async function fetchMetadata(): Promise<ModelMetadata> {
  const resp = await fetch("/api/model");
  if (!resp.ok) throw new Error(`GET /api/model failed: ${resp.status}`);
  return (await resp.json()) as ModelMetadata;
}

async function downloadWav(knobs: Map<string, KnobRow>): Promise<void> {
  const values = [...knobs.values()].map((k) => k.value);
  const body = {
    duration: 2.0,
    controls: [[0, ...values], [2.0, ...values]],
  };
  const resp = await fetch("/api/render", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  if (!resp.ok) throw new Error(`render failed: ${resp.status}`);
  const blob = await resp.blob();
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "sounderfeit.wav";
  a.click();
  URL.revokeObjectURL(a.href);
}

async function boot(): Promise<void> {
  const status = el<HTMLSpanElement>("status");
  const knobPanel = el<HTMLDivElement>("knobs");
  const playBtn = el<HTMLButtonElement>("play");
  const stopBtn = el<HTMLButtonElement>("stop");
  const downloadBtn = el<HTMLButtonElement>("download");

  let meta: ModelMetadata;
  try {
    meta = await fetchMetadata();
  } catch (err) {
    status.textContent = `no model loaded (${String(err)})`;
    return;
  }
  el<HTMLSpanElement>("condition").textContent = meta.condition;

  const views = new ScopeViews(
    el<HTMLCanvasElement>("waveform"),
    el<HTMLCanvasElement>("spectrum"),
    meta.sample_rate,
  );
  const player = new FramePlayer(meta.sample_rate);

  const stream = new AudioStream(wsUrl("/api/stream"), {
    onFrame(samples: Float32Array) {
      player.enqueue(samples);
      views.push(samples);
    },
    onMessage(msg: ServerMessage) {
      if (msg.type === "ack") {
        const row = knobs.get(msg.name);
        if (row) {
          row.value = msg.value;
          row.readout.textContent = formatKnobValue(row.spec, msg.value);
        }
      } else if (msg.type === "error") {
        status.textContent = `server: ${msg.message}`;
      }
    },
    onStatus(s: StreamStatus) {
      status.textContent =
        s === "reconnecting" ? "connection lost — reconnecting…" : s;
    },
  });

  const throttle = new KnobThrottle((name, value) => {
    stream.sendSet(name, value);
  }, 30);

  const knobs = new Map<string, KnobRow>();
  for (const spec of buildKnobSpecs(meta)) {
    const { row, root } = buildKnobRow(spec, (name, value) => {
      throttle.update(name, value);
    });
    knobs.set(spec.name, row);
    knobPanel.appendChild(root);
  }

  playBtn.addEventListener("click", async () => {
    await player.resume();
    stream.start();
    views.start();
  });
  stopBtn.addEventListener("click", async () => {
    stream.stop();
    views.stop();
    await player.suspend();
  });
  downloadBtn.addEventListener("click", () => {
    downloadWav(knobs).catch((err) => {
      status.textContent = String(err);
    });
  });
}

boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = String(err);
});
