img = open_image("Image1.jpg")
horse_exists = query(img, "Is there a horse?")
if horse_exists == "yes":
    carriage_x, carriage_y = get_pos(img, "carriage")
    horse_x, horse_y = get_pos(img, "horse")
    if carriage_x > horse_x:
        answer = "yes"
    else:
        answer = "no"
else:
    answer = "no"
