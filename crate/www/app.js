import init, {
  sceneNames, materialNames, decayProfile, bandpassResponseDb, DemoScene,
} from './pkg/vibroscene_wasm.js';

const $ = (id) => document.getElementById(id);

function axes(ctx, w, h, pad) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = '#999';
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, h - pad);
  ctx.lineTo(w - pad, h - pad);
  ctx.stroke();
}

function polyline(ctx, points) {
  ctx.strokeStyle = '#c50';
  ctx.lineWidth = 2;
  ctx.beginPath();
  points.forEach(([x, y], i) => (i ? ctx.lineTo(x, y) : ctx.moveTo(x, y)));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function drawDecay() {
  const canvas = $('decay');
  const ctx = canvas.getContext('2d');
  const [w, h, pad] = [canvas.width, canvas.height, 30];
  const maxDistance = 1.2;
  const steps = 120;
  try {
    const gains = decayProfile($('material').value, +$('thickness').value, +$('frequency').value, maxDistance, steps);
    axes(ctx, w, h, pad);
    polyline(ctx, Array.from(gains, (g, i) => [pad + (i / steps) * (w - 2 * pad), h - pad - g * (h - 2 * pad)]));
    ctx.fillStyle = '#333';
    ctx.fillText('1', 12, pad + 4);
    ctx.fillText('0', 12, h - pad + 4);
    ctx.fillText(`${maxDistance} m`, w - pad - 20, h - 10);
    const at = (d) => gains[Math.round((d / maxDistance) * steps)].toFixed(4);
    $('decay-values').textContent = [0, 0.4, 0.8, 1.2].map((d) => `Γ(${d} m) = ${at(d)}`).join('\n');
    $('decay-values').className = '';
  } catch (e) {
    $('decay-values').textContent = e.message;
    $('decay-values').className = 'error';
  }
}

function drawResponse() {
  const canvas = $('response');
  const ctx = canvas.getContext('2d');
  const [w, h, pad] = [canvas.width, canvas.height, 30];
  const [lo, hi, floorDb] = [Math.log10(20), Math.log10(20000), -40];
  const freqs = Float64Array.from({ length: 120 }, (_, i) => 10 ** (lo + ((hi - lo) * i) / 119));
  axes(ctx, w, h, pad);
  try {
    const db = bandpassResponseDb(freqs, +$('center').value, +$('q').value);
    const x = (f) => pad + ((Math.log10(f) - lo) / (hi - lo)) * (w - 2 * pad);
    const y = (v) => pad + (Math.min(0, Math.max(floorDb, v)) / floorDb) * (h - 2 * pad);
    polyline(ctx, Array.from(db, (v, i) => [x(freqs[i]), y(v)]));
    ctx.fillStyle = '#333';
    ctx.fillText('0 dB', 2, pad + 4);
    ctx.fillText(`${floorDb} dB`, 2, h - pad);
    [100, 1000, 10000].forEach((f) => ctx.fillText(`${f}`, x(f) - 10, h - 10));
  } catch (e) {
    ctx.fillStyle = '#b00';
    ctx.fillText(e.message, pad + 10, h / 2);
  }
}

let scene = null;
let objects = [];
let view = null;

function loadScene() {
  scene?.free();
  scene = new DemoScene($('scene').value);
  objects = JSON.parse(scene.layout());
  const canvas = $('scene-view');
  const minX = Math.min(...objects.map((o) => o.min[0]));
  const maxX = Math.max(...objects.map((o) => o.max[0]));
  const minZ = Math.min(...objects.map((o) => o.min[2]));
  const maxZ = Math.max(...objects.map((o) => o.max[2]));
  const scale = Math.min((canvas.width - 40) / (maxX - minX), (canvas.height - 40) / (maxZ - minZ));
  view = { minX, minZ, scale, pad: 20 };
  $('touch-result').textContent = '';
  drawScene(null);
}

const toCanvas = (x, z) => [view.pad + (x - view.minX) * view.scale, view.pad + (z - view.minZ) * view.scale];
const toWorld = (px, py) => [view.minX + (px - view.pad) / view.scale, view.minZ + (py - view.pad) / view.scale];

function drawHeatmap(ctx, object) {
  const frame = scene.heatmapFrame(object.id);
  if (frame[0] !== 0 || frame[1] !== 2) return;
  const n = 24;
  const cells = scene.heatmap(object.id, n);
  const [x0, y0] = toCanvas(frame[2], frame[3]);
  const [x1, y1] = toCanvas(frame[4], frame[5]);
  const [cw, ch] = [(x1 - x0) / n, (y1 - y0) / n];
  cells.forEach((g, i) => {
    ctx.fillStyle = `rgba(220, 80, 0, ${g.toFixed(3)})`;
    ctx.fillRect(x0 + (i % n) * cw, y0 + Math.floor(i / n) * ch, cw + 0.5, ch + 0.5);
  });
}

function drawScene(touched) {
  const canvas = $('scene-view');
  const ctx = canvas.getContext('2d');
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const byHeight = [...objects].sort((a, b) => a.max[1] - b.max[1]);
  for (const o of byHeight) {
    const [x0, y0] = toCanvas(o.min[0], o.min[2]);
    const [x1, y1] = toCanvas(o.max[0], o.max[2]);
    ctx.fillStyle = o.source ? '#fde2c8' : '#eef1f5';
    ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
    if (touched && touched.id === o.id) drawHeatmap(ctx, o);
    ctx.strokeStyle = o.source ? '#c50' : '#789';
    ctx.strokeRect(x0, y0, x1 - x0, y1 - y0);
    ctx.fillStyle = '#333';
    ctx.fillText(o.id, x0 + 3, y0 + 12);
  }
  if (touched) {
    const [px, py] = toCanvas(touched.point[0], touched.point[2]);
    ctx.fillStyle = '#000';
    ctx.beginPath();
    ctx.arc(px, py, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function onSceneClick(event) {
  const rect = event.target.getBoundingClientRect();
  const [x, z] = toWorld(event.clientX - rect.left, event.clientY - rect.top);
  const hits = objects.filter((o) => x >= o.min[0] && x <= o.max[0] && z >= o.min[2] && z <= o.max[2]);
  if (!hits.length) return;
  const top = hits.reduce((a, b) => (b.max[1] > a.max[1] ? b : a));
  const point = [x, top.max[1], z];
  const mode = document.querySelector('input[name=mode]:checked').value;
  try {
    const gains = JSON.parse(scene.touch(top.id, x, point[1], z, mode));
    const lines = gains.map((g) => `${g.source} → ${top.id}: Γ = ${g.gain.toFixed(4)} via ${g.path.join(' → ')}`);
    $('touch-result').textContent =
      `${top.id} at (${point.map((v) => v.toFixed(3)).join(', ')}), ${mode}\n` + (lines.join('\n') || 'no vibration');
    $('touch-result').className = '';
    drawScene({ id: top.id, point });
  } catch (e) {
    $('touch-result').textContent = e.message;
    $('touch-result').className = 'error';
  }
}

async function main() {
  await init();
  for (const name of materialNames()) $('material').add(new Option(name, name, name === 'plywood', name === 'plywood'));
  for (const name of sceneNames()) $('scene').add(new Option(name, name));
  ['material', 'thickness', 'frequency'].forEach((id) => $(id).addEventListener('input', drawDecay));
  ['center', 'q'].forEach((id) => $(id).addEventListener('input', drawResponse));
  $('scene').addEventListener('change', loadScene);
  $('scene-view').addEventListener('click', onSceneClick);
  drawDecay();
  drawResponse();
  loadScene();
  $('status').textContent = 'Engine loaded.';
}

main().catch((e) => {
  $('status').textContent = `Failed to load the engine: ${e.message}. Build it with wasm-pack first (see README).`;
  $('status').className = 'error';
});
