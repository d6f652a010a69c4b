import init, { TactileView, PoseView, detector_threshold } from "./pkg/tacgrasp_web.js";

const $ = (id) => document.getElementById(id);

function draw(canvas, rgba, w, h, scale) {
  canvas.width = w;
  canvas.height = h;
  canvas.style.width = `${w * scale}px`;
  canvas.style.height = `${h * scale}px`;
  canvas.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), w, h), 0, 0);
}

function showValues(ids) {
  for (const id of ids) $(`${id}-v`).textContent = $(id).value;
}

function renderContact() {
  showValues(["size", "depth", "cx", "cy", "rot"]);
  const view = new TactileView(
    $("shape").value, +$("size").value, +$("depth").value, +$("cx").value, +$("cy").value, +$("rot").value,
  );
  try {
    draw($("pressed"), view.pressed_rgba(), view.width(), view.height(), 1.5);
    draw($("netin"), view.network_input_rgba(), 40, 60, 4);
    const s = view.ssim_to_rest();
    const state = view.in_contact() ? "deformed" : "at rest";
    $("ssim").textContent = `SSIM ${s.toFixed(4)} (threshold ${detector_threshold()}): ${state}`;
  } finally {
    view.free();
  }
}

function renderPose() {
  showValues(["len", "wid", "ang"]);
  const view = new PoseView(+$("len").value, +$("wid").value, +$("ang").value);
  try {
    draw($("mask"), view.mask_rgba(), view.size(), view.size(), 1.5);
    $("pose").innerHTML =
      `orientation ${view.orientation_deg.toFixed(2)}&deg;<br>` +
      `axes ${view.major_axis.toFixed(1)} x ${view.minor_axis.toFixed(1)} px, ratio ${view.aspect_ratio.toFixed(3)}<br>` +
      `finger rotation ${view.grasp_rotation_deg.toFixed(1)}&deg; ` +
      `(45 spherical at 1:1, 0 cylindrical at 3:1)`;
  } finally {
    view.free();
  }
}

function guard(f) {
  return () => {
    try {
      f();
      $("err").textContent = "";
    } catch (e) {
      $("err").textContent = String(e);
    }
  };
}

await init();
for (const id of ["shape", "size", "depth", "cx", "cy", "rot"]) $(id).addEventListener("input", guard(renderContact));
for (const id of ["len", "wid", "ang"]) $(id).addEventListener("input", guard(renderPose));
guard(renderContact)();
guard(renderPose)();
