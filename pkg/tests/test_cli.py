import numpy as np

from splatlink.cli import main
from splatlink.geometry import pose_error
from splatlink.image import load_ppm, save_ppm
from splatlink.metrics import mse, psnr
from splatlink.renderer import render
from splatlink.scene import load_scene

from conftest import front_pose, small_intrinsics


def pose_text(pose):
    return " ".join(repr(float(v))
                    for v in list(pose.rotation) + list(pose.translation))


def test_full_cli_loop(tmp_path, capsys):
    scene_path = tmp_path / "scene.bin"
    assert main(["scene", "gen", "--seed", "3", "--count", "60",
                 "--output", str(scene_path)]) == 0
    scene = load_scene(str(scene_path))
    assert len(scene) == 60

    intr = small_intrinsics()
    pose = front_pose()
    camera = render(scene, pose, intr)
    cam_path = tmp_path / "camera.ppm"
    save_ppm(camera, str(cam_path))

    packet_path = tmp_path / "frame.pkt"
    rng = np.random.default_rng(0)
    from splatlink.geometry import perturb_pose_axis
    init = perturb_pose_axis(pose, rng, "rotation", 2.0)
    assert main(["encode", "--scene", str(scene_path),
                 "--camera", str(cam_path),
                 "--init-pose", pose_text(init),
                 "--quality", "80",
                 "--output", str(packet_path)]) == 0
    assert packet_path.stat().st_size > 40

    out_path = tmp_path / "recon.ppm"
    assert main(["decode", "--scene", str(scene_path),
                 "--packet", str(packet_path),
                 "--output", str(out_path)]) == 0
    recon = load_ppm(str(out_path))
    # PPM storage adds 8-bit quantization on top of codec loss
    assert psnr(mse(camera, recon)) > 30.0

    capsys.readouterr()
    assert main(["link", "sim", "--bitrate", "100000",
                 str(packet_path)]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "frame_id,bytes,tx_time_s,cumulative_s"
    assert len(lines) == 2
    assert lines[1].split(",")[1] == str(packet_path.stat().st_size)


def test_cli_study_benchmark(tmp_path):
    out_dir = tmp_path / "out"
    assert main(["study", "benchmark", "--seed", "1", "--frames", "2",
                 "--width", "96", "--height", "54",
                 "--out-dir", str(out_dir)]) == 0
    text = (out_dir / "benchmark.csv").read_text()
    lines = text.strip().splitlines()
    assert lines[0].startswith("method,quality,")
    assert len(lines) == 4
    assert [ln.split(",")[0] for ln in lines[1:]] == ["direct", "no_opt", "invs"]


def test_cli_link_sizes_only(capsys):
    assert main(["link", "sim", "--bitrate", "100000",
                 "--sizes", "1250,1250"]) == 0
    out = capsys.readouterr().out
    assert out.strip().splitlines()[1] == "0,1250,0.1,0.1"
